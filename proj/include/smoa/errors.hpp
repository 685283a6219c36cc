#pragma once

#include <stdexcept>
#include <string>

namespace smoa {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes do not conform.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Index, interval or rank argument outside its admissible range.
class RangeError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration, e.g. a block count that does not divide a dimension.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed argument that is neither a shape nor a range problem.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// Non-convergence, non-finite values or failed estimation.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// File system and serialization failures.
class IoError : public Error {
 public:
  using Error::Error;
};

std::string shape_string(std::size_t rows, std::size_t cols);

}  // namespace smoa
