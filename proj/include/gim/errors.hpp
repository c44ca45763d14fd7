#pragma once

#include <stdexcept>
#include <string>

namespace gim {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input-side failures. The CLI maps these to exit code 2.

class ArgumentError : public Error {
 public:
  using Error::Error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

class ParseError : public DataError {
 public:
  ParseError(const std::string& what, long row, long column)
      : DataError(what), row_(row), column_(column) {}

  long row() const noexcept { return row_; }
  long column() const noexcept { return column_; }

 private:
  long row_;
  long column_;
};

/// Exhaustive enumeration refused because the graph count exceeds the cap.
class RefusalError : public ArgumentError {
 public:
  RefusalError(const std::string& what, unsigned long long count)
      : ArgumentError(what), count_(count) {}

  unsigned long long count() const noexcept { return count_; }

 private:
  unsigned long long count_;
};

// Numerical failures. The CLI maps these to exit code 3.

class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Singular or indefinite Yule-Walker system, singular innovation covariance.
class DegeneracyError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// A per-frequency matrix could not be inverted.
class SingularityError : public NumericalError {
 public:
  SingularityError(const std::string& what, long frequency_index)
      : NumericalError(what), frequency_index_(frequency_index) {}

  long frequency_index() const noexcept { return frequency_index_; }

 private:
  long frequency_index_;
};

class StabilityError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Covariances recovered from a grid carry a non-negligible imaginary part.
class InconsistencyError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class IdentifiabilityError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// No candidate model in a search converged.
class SelectionError : public Error {
 public:
  using Error::Error;
};

}  // namespace gim
