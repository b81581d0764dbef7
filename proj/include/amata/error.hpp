#pragma once

#include <stdexcept>
#include <string>

namespace amata {

// Base for every error raised by the library. The CLI maps subclasses onto
// exit codes, so new error kinds should derive from one of these.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor shapes that do not conform for an operation.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A precondition of an API call was violated by the caller.
class ContractError : public Error {
 public:
  using Error::Error;
};

class IndexError : public Error {
 public:
  using Error::Error;
};

/// A non-finite value (or divergence) was produced during computation.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Malformed file contents (bad magic, truncated payload, ...).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Input carries no usable signal (e.g. only zero vectors).
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

/// Invalid or incomplete experiment configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace amata
