#pragma once

#include <stdexcept>
#include <string>

namespace fireclr {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration or parameter values (CLI exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Input data that violates a precondition: missing bands, grid mismatch,
/// malformed files (CLI exit code 3).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Malformed or truncated serialized artifact.
class FormatError : public DataError {
 public:
  using DataError::DataError;
};

/// Numerical failure such as a non-finite training loss (CLI exit code 4).
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace fireclr
