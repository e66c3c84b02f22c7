#pragma once

#include <stdexcept>
#include <string>

namespace ssigmm {

// Base of every error thrown by the library. The CLI maps subclasses to exit
// codes, so each one belongs to exactly one of the categories below.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Numerical failures (exit code 4).
class NumericalError : public Error {
 public:
  using Error::Error;
};

class NotPositiveDefinite : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class AllNegInfinite : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class DegenerateComponent : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// Contract violations by callers; these indicate bugs rather than bad input.
class EmptyCluster : public Error {
 public:
  using Error::Error;
};

class ConstraintViolation : public Error {
 public:
  using Error::Error;
};

// Validation of user-supplied configuration or data (exit code 2).
class ValidationError : public Error {
 public:
  using Error::Error;
};

class InvalidConfig : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class LengthMismatch : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class ClassTooSmall : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class ParseError : public ValidationError {
 public:
  ParseError(const std::string& what, long row, long column)
      : ValidationError(what), row_(row), column_(column) {}

  long row() const { return row_; }
  long column() const { return column_; }

 private:
  long row_;
  long column_;
};

// Filesystem failures (exit code 3).
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace ssigmm
