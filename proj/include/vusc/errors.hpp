#pragma once

#include <stdexcept>
#include <string>

namespace vusc {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the domain where a model is defined (k <= 0, k outside a
/// tabulated range, evanescent incidence).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Caller broke a documented precondition or a value violates a type invariant.
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Malformed input document. `where()` carries "file:line:col" or a field path.
class ParseError : public Error {
 public:
  ParseError(std::string where, const std::string& what)
      : Error(where + ": " + what), where_(std::move(where)) {}
  const std::string& where() const noexcept { return where_; }

 private:
  std::string where_;
};

/// Iterative numerics failed (bisection did not converge, optimizer diverged).
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Eigenvalues of a Hopfield matrix left the real axis.
class ModelInstabilityError : public NumericError {
 public:
  using NumericError::NumericError;
};

/// Observation or dataset row that cannot be used.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Not enough peaks, samples or detuning range to compute a quantity.
class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

/// The supplied bracket does not enclose an interior minimum.
class BracketError : public NumericError {
 public:
  using NumericError::NumericError;
};

}  // namespace vusc
