#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace belavkin {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidDimension : public Error {
 public:
  using Error::Error;
};

/// A state or operator needs more Fock levels than the truncation provides.
class TruncationOverflow : public Error {
 public:
  TruncationOverflow(const std::string& what, double leakage)
      : Error(what), leakage_(leakage) {}
  double leakage() const noexcept { return leakage_; }

 private:
  double leakage_;
};

class NormalizationError : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class SingularityError : public Error {
 public:
  using Error::Error;
};

class QuadratureError : public Error {
 public:
  using Error::Error;
};

class GridMismatch : public Error {
 public:
  using Error::Error;
};

class ParametrizationBreakdown : public Error {
 public:
  using Error::Error;
};

class ParamsMismatch : public Error {
 public:
  using Error::Error;
};

/// Failure inside a time-stepping loop. Carries the step index and time when
/// known (step == npos otherwise).
class NumericalFailure : public Error {
 public:
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  NumericalFailure(const std::string& what, std::size_t step = npos,
                   double time = 0.0)
      : Error(what), step_(step), time_(time) {}

  std::size_t step() const noexcept { return step_; }
  double time() const noexcept { return time_; }

 private:
  std::size_t step_;
  double time_;
};

/// Non-finite amplitudes appeared.
class NumericalBlowup : public NumericalFailure {
 public:
  using NumericalFailure::NumericalFailure;
};

/// The grid step is too coarse for the scheme (norm drift, positivity loss).
class StepSizeError : public NumericalFailure {
 public:
  using NumericalFailure::NumericalFailure;
};

/// A trajectory inside an ensemble failed; the whole ensemble is rejected.
class TrajectoryFailure : public Error {
 public:
  TrajectoryFailure(const std::string& what, std::size_t trajectory)
      : Error(what), trajectory_(trajectory) {}
  std::size_t trajectory() const noexcept { return trajectory_; }

 private:
  std::size_t trajectory_;
};

}  // namespace belavkin
