#pragma once

#include <stdexcept>
#include <string>

namespace fpid::core {

/// Raised when an image or template violates its invariants or cannot be decoded.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when an operation's precondition does not hold.
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace fpid::core
