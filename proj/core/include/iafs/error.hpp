#pragma once

#include <stdexcept>
#include <string>

namespace iafs {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shape mismatch, out-of-range argument or violated precondition.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent configuration (CLI exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A required input file or directory does not exist (CLI exit code 3).
class MissingInput : public Error {
 public:
  using Error::Error;
};

/// Non-finite values, underflow or broken spectral symmetry (CLI exit code 4).
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Unreadable / unwritable file or corrupt on-disk format.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace iafs
