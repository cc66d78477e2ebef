#pragma once

#include <stdexcept>
#include <string>

namespace tkg {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Incompatible tensor shapes, or a shape that violates an op's contract.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Bad input data: missing files, malformed lines, out-of-range indices.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Invalid or unknown configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Numerical failure during training (e.g. a non-finite loss).
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace tkg
