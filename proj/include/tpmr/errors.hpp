#pragma once

#include <stdexcept>
#include <string>

namespace tpmr {

/// Base for all errors raised by the toolkit. The CLI maps each subclass to
/// a distinct exit status.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UsageError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Solver failed to converge or a numerical invariant was violated.
class NumericError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace tpmr
