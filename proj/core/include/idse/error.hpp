#pragma once

#include <stdexcept>
#include <string>

namespace idse {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or truncated file, bad magic, unsupported version.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// File could not be opened, read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A sketch was computed on a different pixel grid than the image it is used with.
class GridMismatchError : public DomainError {
 public:
  using DomainError::DomainError;
};

/// Iterative method ran out of iterations. Carries the last estimate.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double last_estimate)
      : Error(what), last_estimate_(last_estimate) {}

  double last_estimate() const noexcept { return last_estimate_; }

 private:
  double last_estimate_;
};

}  // namespace idse
