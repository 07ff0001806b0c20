#include "seqmix/alphabet.hpp"

#include <algorithm>

#include "seqmix/errors.hpp"

namespace seqmix {

Alphabet::Alphabet(std::vector<std::string> labels) : labels_(std::move(labels)) {
  std::sort(labels_.begin(), labels_.end());
  labels_.erase(std::unique(labels_.begin(), labels_.end()), labels_.end());
  if (labels_.size() < 2) {
    throw input_error("alphabet must contain at least 2 distinct states, got " +
                      std::to_string(labels_.size()));
  }
  if (labels_.size() > 255) {
    throw input_error("alphabet exceeds the supported 255 states");
  }
  for (int i = 0; i < static_cast<int>(labels_.size()); ++i) index_.emplace(labels_[i], i);
}

std::optional<int> Alphabet::index(std::string_view label) const {
  auto it = index_.find(std::string(label));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

}  // namespace seqmix
