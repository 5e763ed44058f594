#pragma once

#include <stdexcept>
#include <string>

namespace bads {

// Bad input, bad config, or a contract violation by the caller. CLI exit code 2.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Incompatible matrix or layer dimensions.
class ShapeError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Operation not defined for the given weight representation.
class UnsupportedError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// A loss, gradient or parameter became NaN/Inf. CLI exit code 3.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace bads
