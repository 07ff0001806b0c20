#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace seqmix {

// Ordered set of distinct state labels. Indices are assigned in lexicographic
// label order so encodings are deterministic across runs.
class Alphabet {
public:
  Alphabet() = default;
  explicit Alphabet(std::vector<std::string> labels);

  int size() const { return static_cast<int>(labels_.size()); }
  const std::string& label(int index) const { return labels_.at(static_cast<std::size_t>(index)); }
  const std::vector<std::string>& labels() const { return labels_; }
  std::optional<int> index(std::string_view label) const;

  bool operator==(const Alphabet& other) const { return labels_ == other.labels_; }

private:
  std::vector<std::string> labels_;
  std::unordered_map<std::string, int> index_;
};

}  // namespace seqmix
