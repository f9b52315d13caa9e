#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <numbers>
#include <optional>
#include <string>
#include <utility>

#include "belavkin/error.hpp"
#include "belavkin/fock.hpp"

namespace belavkin {

/// Field amplitude f(t) of the coherent input channel (units 1/sqrt(time)).
class Drive {
 public:
  Drive() = default;

  static Drive constant(cplx f0) {
    Drive d;
    d.constant_ = f0;
    return d;
  }

  static Drive function(std::function<cplx(double)> fn) {
    if (!fn) throw DomainError("drive function is empty");
    Drive d;
    d.constant_.reset();
    d.fn_ = std::move(fn);
    return d;
  }

  cplx operator()(double t) const { return constant_ ? *constant_ : fn_(t); }

  bool is_constant() const noexcept { return constant_.has_value(); }
  /// Value of a constant drive; 0 otherwise.
  cplx constant_value() const noexcept { return constant_.value_or(cplx{}); }
  bool is_zero() const noexcept { return constant_ && *constant_ == cplx{}; }

 private:
  std::optional<cplx> constant_{cplx{}};
  std::function<cplx(double)> fn_;
};

/// Local-oscillator phase phi(t).
class Phase {
 public:
  enum class Kind { constant, sweep, custom };

  Phase() = default;

  static Phase constant(double phi0) {
    Phase p;
    p.kind_ = Kind::constant;
    p.value_ = phi0;
    return p;
  }

  /// phi(t) = pi/2 - omega0 t.
  static Phase sweep(double omega0) {
    Phase p;
    p.kind_ = Kind::sweep;
    p.value_ = omega0;
    return p;
  }

  static Phase function(std::function<double(double)> fn) {
    Phase p;
    p.kind_ = Kind::custom;
    p.fn_ = std::move(fn);
    return p;
  }

  double operator()(double t) const {
    switch (kind_) {
      case Kind::constant: return value_;
      case Kind::sweep: return 0.5 * std::numbers::pi - value_ * t;
      case Kind::custom: return fn_(t);
    }
    return 0.0;
  }

  Kind kind() const noexcept { return kind_; }
  bool is_sweep() const noexcept { return kind_ == Kind::sweep; }
  /// Sweep rate for Kind::sweep, 0 otherwise.
  double omega0() const noexcept { return kind_ == Kind::sweep ? value_ : 0.0; }
  /// e^{-i phi(t)}
  cplx rotor(double t) const { return std::polar(1.0, -(*this)(t)); }

 private:
  Kind kind_ = Kind::constant;
  double value_ = 0.0;
  std::function<double(double)> fn_;
};

/// Physical parameters of the cavity mode and its observation channel.
/// Units with hbar = 1, so H = omega (a†a + 1/2).
struct ModelParams {
  double omega = 1.0;  // cavity frequency
  double mu = 0.0;     // coupling constant
  Drive drive;         // f(t)
  Phase phase;         // phi(t)
  std::size_t dim = 64;

  double omega0() const noexcept { return phase.omega0(); }

  void validate() const {
    if (!(omega > 0.0) || !std::isfinite(omega)) {
      throw DomainError("omega must be a positive finite number");
    }
    if (!(mu >= 0.0) || !std::isfinite(mu)) {
      throw DomainError("mu must be a non-negative finite number");
    }
    require_dim(dim);
  }

  /// iω + μ/2, the complex decay rate of a free amplitude.
  cplx decay_rate() const { return cplx{mu / 2.0, omega}; }

  /// Diagonal of K = iω(a†a + 1/2) + (μ/2)a†a.
  Vector k_diagonal() const {
    Vector k(static_cast<Eigen::Index>(dim));
    for (Eigen::Index n = 0; n < k.size(); ++n) {
      const double nn = static_cast<double>(n);
      k[n] = cplx{0.5 * mu * nn, omega * (nn + 0.5)};
    }
    return k;
  }

  /// 2 Re(e^{-i phi(t)} f(t)): the deterministic offset between the observed
  /// record increment and the Wiener increment, per unit time.
  double record_offset(double t) const {
    return 2.0 * (phase.rotor(t) * drive(t)).real();
  }
};

}  // namespace belavkin
