#pragma once

#include <stdexcept>
#include <string>

namespace swdrso {

// Bad user input: malformed configuration, out-of-range arguments,
// inconsistent shapes. The CLI maps these to exit code 1.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed or incompatible files (datasets, checkpoints).
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace swdrso
