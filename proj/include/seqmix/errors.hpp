#pragma once

#include <stdexcept>
#include <string>

namespace seqmix {

// Bad user input: malformed files, inadmissible model specifications,
// out-of-range arguments.
struct input_error : std::runtime_error {
  explicit input_error(const std::string& what) : std::runtime_error(what) {}
};

// Fit-time failure: degenerate components, non-finite objectives.
struct estimation_error : std::runtime_error {
  explicit estimation_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace seqmix
