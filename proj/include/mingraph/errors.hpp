#pragma once

#include <stdexcept>
#include <string>

namespace mingraph {

/// Base for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input: bad configuration, dimensions, or parameters.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// A mathematical precondition of an operation does not hold for the given data
/// (e.g. a flat-normal-bundle check requested on a non-flat graph).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Evaluation requested at or too near a singular point, or outside the
/// domain of an analytic map.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Stencil or integration region does not fit in the chart.
class CoverageError : public Error {
 public:
  CoverageError(const std::string& what, double covered_fraction)
      : Error(what), covered_fraction_(covered_fraction) {}
  double covered_fraction() const { return covered_fraction_; }

 private:
  double covered_fraction_;
};

/// An iterative method failed to reach its tolerance.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double residual) : Error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

}  // namespace mingraph
