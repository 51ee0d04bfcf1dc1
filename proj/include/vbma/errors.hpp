#pragma once

#include <stdexcept>
#include <string>

namespace vbma {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Vector or matrix sizes that do not line up.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Bad configuration, declaration file or CLI input.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Dataset could not be read or prepared.
class IngestionError : public Error {
 public:
  using Error::Error;
};

/// Lookup of a named entity (coefficient, model, column) failed.
class LookupError : public Error {
 public:
  using Error::Error;
};

/// Base for failures of the numerics themselves (CLI exit code 2).
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// An elementary operation produced NaN or infinity.
class NonFiniteError : public NumericalError {
 public:
  NonFiniteError(const std::string& operation, const std::string& detail)
      : NumericalError("non-finite value produced by '" + operation + "': " + detail),
        operation_(operation) {}

  const std::string& operation() const noexcept { return operation_; }

 private:
  std::string operation_;
};

/// A matrix factorization failed (singular or indefinite input).
class DecompositionError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Covariance matrix stayed indefinite after jitter escalation.
class ConditioningError : public NumericalError {
 public:
  ConditioningError(const std::string& what, double min_eigenvalue)
      : NumericalError(what), min_eigenvalue_(min_eigenvalue) {}

  double min_eigenvalue() const noexcept { return min_eigenvalue_; }

 private:
  double min_eigenvalue_;
};

/// A VBMA iteration could not be completed.
class IterationError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace vbma
