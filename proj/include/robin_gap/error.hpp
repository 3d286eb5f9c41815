#pragma once

#include <stdexcept>
#include <string>

namespace robin_gap {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An argument violates an operation's precondition.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A value does not fit in a plain double.
class OverflowError : public Error {
 public:
  using Error::Error;
};

/// An iterative method (series, root finder, eigensolver, quadrature) did not converge.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

/// A root scan found no sign change, or a bracket was broken by a pole.
class BracketError : public Error {
 public:
  using Error::Error;
};

/// A least-squares fit has too few points or zero abscissa variance.
class FitError : public Error {
 public:
  using Error::Error;
};

/// Mesh construction or validation failed.
class MeshError : public Error {
 public:
  using Error::Error;
};

}  // namespace robin_gap
