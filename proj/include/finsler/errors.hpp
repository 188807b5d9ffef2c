#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace finsler {

/// Base class for all errors thrown by the library.
class Error : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A point (or a finite-difference stencil point) left the kernel domain,
/// or an elementary operation left its real domain (sqrt/log of a
/// non-positive value, division by zero).
class DomainError : public Error {
  using Error::Error;
};

/// A derivative order outside the configured budget was requested.
class CapabilityError : public Error {
  using Error::Error;
};

/// The metric tensor is numerically singular at the evaluation point.
class SingularMetricError : public Error {
  using Error::Error;
};

/// Invalid parameters for a builtin metric family.
class ParamError : public Error {
  using Error::Error;
};

/// Adaptive step-size controller underflowed.
class StepFailure : public Error {
  using Error::Error;
};

/// Malformed expression text.
class ParseError : public Error {
 public:
  ParseError(const std::string& msg, std::size_t position, std::string expected)
      : Error(msg + " at position " + std::to_string(position)),
        position_(position),
        expected_(std::move(expected)) {}

  std::size_t position() const { return position_; }
  const std::string& expected() const { return expected_; }

 private:
  std::size_t position_;
  std::string expected_;
};

/// A variable reference does not fit the declared dimension (e.g. y3 with
/// dim 2).
class ArityError : public Error {
 public:
  ArityError(const std::string& msg, std::size_t position)
      : Error(msg + " at position " + std::to_string(position)),
        position_(position) {}

  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

}  // namespace finsler
