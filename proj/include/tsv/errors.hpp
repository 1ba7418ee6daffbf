#pragma once

#include <stdexcept>
#include <string>

namespace tsv {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

/// A value failed the invariants of the type it was being constructed as.
class InvariantViolation : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// An eigen-solver or other numerical kernel missed its own postcondition.
class NumericalFailure : public Error {
 public:
  using Error::Error;
};

/// More than one element of an orthonormal basis satisfied the outcome rule.
/// The model forbids this, so seeing it means the input basis is not
/// orthonormal or something upstream is broken.
class MultipleOutcomes : public Error {
 public:
  using Error::Error;
};

class OrthogonalPostSelection : public Error {
 public:
  using Error::Error;
};

class NotApplicable : public Error {
 public:
  using Error::Error;
};

class DegenerateInstance : public Error {
 public:
  using Error::Error;
};

class InvalidSic : public Error {
 public:
  using Error::Error;
};

/// The commutator target has a nonzero diagonal or nonzero entries inside a
/// degenerate eigenspace of the Hamiltonian, so no solution exists.
class InfeasibleK : public Error {
 public:
  using Error::Error;
};

class NotPsd : public Error {
 public:
  NotPsd(const std::string& what, double min_eigenvalue)
      : Error(what), min_eigenvalue_(min_eigenvalue) {}
  double minEigenvalue() const noexcept { return min_eigenvalue_; }

 private:
  double min_eigenvalue_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace tsv
