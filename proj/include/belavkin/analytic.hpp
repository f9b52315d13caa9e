#pragma once

// Closed-form posterior dynamics for coherent and squeezed coherent initial
// states. A squeezed posterior is parametrized by (Γ₁, Γ₂, α): it satisfies
// (aΓ₁ + a†Γ₂)ψ = αψ, and Γ = Γ₂/Γ₁ obeys the Riccati equation
//   dΓ/dt = -2(iω + μ/2)Γ + μ e^{-2iφ} Γ².
// The gauge is fixed by taking Γ₁ = 1/√(1-|Γ|²) real.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <tuple>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "belavkin/error.hpp"
#include "belavkin/fock.hpp"
#include "belavkin/model.hpp"
#include "belavkin/wiener.hpp"

namespace belavkin {

namespace detail {

inline constexpr double kQuadratureTolerance = 1e-10;

/// ∫_a^b g(s) ds for complex g, adaptive Gauss–Kronrod on each part.
inline cplx integrate_complex(const std::function<cplx(double)>& g, double a, double b,
                              double tol = kQuadratureTolerance, unsigned max_depth = 20) {
  using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
  double err_re = 0.0, err_im = 0.0, l1_re = 0.0, l1_im = 0.0;
  const double re = GK::integrate([&](double s) { return g(s).real(); }, a, b, max_depth, tol, &err_re, &l1_re);
  const double im = GK::integrate([&](double s) { return g(s).imag(); }, a, b, max_depth, tol, &err_im, &l1_im);
  const double scale = std::max({1.0, l1_re, l1_im});
  if (!std::isfinite(re) || !std::isfinite(im) || err_re > 100 * tol * scale || err_im > 100 * tol * scale) {
    throw QuadratureError("quadrature did not converge on [" + std::to_string(a) + ", " + std::to_string(b) + "]");
  }
  return {re, im};
}

/// Non-adaptive 15-point Gauss–Kronrod on a short interval.
inline cplx integrate_panel(const std::function<cplx(double)>& g, double a, double b) {
  using GK = boost::math::quadrature::gauss_kronrod<double, 15>;
  const double re = GK::integrate([&](double s) { return g(s).real(); }, a, b, 0);
  const double im = GK::integrate([&](double s) { return g(s).imag(); }, a, b, 0);
  return {re, im};
}

inline void require_time(double t) {
  if (!(t >= 0.0) || !std::isfinite(t)) throw DomainError("time must be finite and >= 0");
}

inline void require_gamma(cplx g) {
  if (!(std::abs(g) < 1.0)) throw DomainError("|gamma| must be < 1");
}

}  // namespace detail

/// -√μ ∫₀ᵗ e^{-(iω+μ/2)(t-s)} f(s) ds: the amplitude the posterior relaxes to.
inline cplx asymptotic_amplitude(const ModelParams& p, double t) {
  detail::require_time(t);
  const cplx k = p.decay_rate();
  const double sqmu = std::sqrt(p.mu);
  if (p.drive.is_constant()) {
    const cplx f0 = p.drive.constant_value();
    if (f0 == cplx{} || t == 0.0) return 0.0;
    // ∫₀ᵗ e^{-k(t-s)} ds = (1 - e^{-kt})/k, or t when k = 0
    const cplx kernel = std::abs(k * t) < 1e-8 ? t * (1.0 - 0.5 * k * t) : (1.0 - std::exp(-k * t)) / k;
    return -sqmu * f0 * kernel;
  }
  if (t == 0.0) return 0.0;
  // Panels a few oscillation/decay lengths wide keep the adaptive rule accurate
  // on long windows.
  const double width = 8.0 / std::max(std::abs(k), 1e-3);
  const auto panels = static_cast<std::size_t>(std::ceil(t / width));
  cplx integral = 0.0;
  for (std::size_t j = 0; j < panels; ++j) {
    const double a = t * static_cast<double>(j) / static_cast<double>(panels);
    const double b = t * static_cast<double>(j + 1) / static_cast<double>(panels);
    integral += detail::integrate_complex([&](double s) { return std::exp(-k * (t - s)) * p.drive(s); }, a, b);
  }
  return -sqmu * integral;
}

/// Amplitude of the coherent posterior: α₀ e^{-(iω+μ/2)t} plus the driven part.
/// It does not depend on the noise.
inline cplx coherent_amplitude(cplx alpha0, const ModelParams& p, double t) {
  detail::require_time(t);
  return alpha0 * std::exp(-p.decay_rate() * t) + asymptotic_amplitude(p, t);
}

// ---------------------------------------------------------------------------
// Riccati equation

enum class RiccatiRoute { automatic, closed_form, quadrature };

/// Γ(t) = Γ₀ e^{-(2iω+μ)t} / (1 - μΓ₀ ∫₀ᵗ e^{-(2iω+μ)s - 2iφ(s)} ds).
/// For the phase sweep φ = π/2 - ω₀t the integral is elementary; `automatic`
/// uses it when available.
inline cplx riccati_gamma(cplx gamma0, const ModelParams& p, double t,
                          RiccatiRoute route = RiccatiRoute::automatic) {
  detail::require_gamma(gamma0);
  detail::require_time(t);
  if (route == RiccatiRoute::automatic) {
    route = p.phase.is_sweep() ? RiccatiRoute::closed_form : RiccatiRoute::quadrature;
  }
  const cplx rot = std::exp(-cplx{p.mu, 2.0 * p.omega} * t);  // e^{-(2iω+μ)t}
  if (gamma0 == cplx{} || p.mu == 0.0) return gamma0 * rot;

  cplx denom;
  if (route == RiccatiRoute::closed_form) {
    if (!p.phase.is_sweep()) throw DomainError("closed form needs the phase sweep pi/2 - omega0 t");
    // e^{-2iφ(s)} = -e^{2iω₀s}, so the integral is (1 - e^{-ct})/c with
    // c = 2iω - 2iω₀ + μ.
    const cplx c{p.mu, 2.0 * (p.omega - p.omega0())};
    const cplx kernel = std::abs(c * t) < 1e-8 ? t * (1.0 - 0.5 * c * t) : (1.0 - std::exp(-c * t)) / c;
    denom = 1.0 + p.mu * gamma0 * kernel;
  } else {
    const cplx two_k{p.mu, 2.0 * p.omega};
    const cplx j = t == 0.0 ? cplx{} : detail::integrate_complex(
        [&](double s) { return std::exp(-two_k * s - 2.0 * kI * p.phase(s)); }, 0.0, t, 1e-13);
    denom = 1.0 - p.mu * gamma0 * j;
  }
  if (std::abs(denom) < 1e-12) throw SingularityError("Riccati denominator vanishes at t=" + std::to_string(t));
  return gamma0 * rot / denom;
}

/// Γ on the grid t_k = k dt, k = 0..steps. Closed form for the phase sweep,
/// otherwise the phase integral accumulated panel by panel.
inline std::vector<cplx> riccati_track(cplx gamma0, const ModelParams& p, double dt, std::size_t steps) {
  detail::require_gamma(gamma0);
  std::vector<cplx> out(steps + 1);
  if (p.phase.is_sweep() || gamma0 == cplx{} || p.mu == 0.0) {
    for (std::size_t k = 0; k <= steps; ++k) out[k] = riccati_gamma(gamma0, p, static_cast<double>(k) * dt);
    return out;
  }
  const cplx two_k{p.mu, 2.0 * p.omega};
  const auto g = [&](double s) { return std::exp(-two_k * s - 2.0 * kI * p.phase(s)); };
  cplx j = 0.0;
  out[0] = gamma0;
  for (std::size_t k = 0; k < steps; ++k) {
    const double t0 = static_cast<double>(k) * dt;
    const double t1 = static_cast<double>(k + 1) * dt;
    j += detail::integrate_panel(g, t0, t1);
    const cplx denom = 1.0 - p.mu * gamma0 * j;
    if (std::abs(denom) < 1e-12) throw SingularityError("Riccati denominator vanishes at t=" + std::to_string(t1));
    out[k + 1] = gamma0 * std::exp(-two_k * t1) / denom;
  }
  return out;
}

/// Classical RK4 integration of the Riccati equation itself.
inline cplx riccati_rk4(cplx gamma0, const ModelParams& p, double t, std::size_t steps) {
  const cplx two_k{p.mu, 2.0 * p.omega};
  const auto rhs = [&](double s, cplx g) {
    return -two_k * g + p.mu * std::exp(-2.0 * kI * p.phase(s)) * g * g;
  };
  const double h = t / static_cast<double>(steps);
  cplx g = gamma0;
  for (std::size_t k = 0; k < steps; ++k) {
    const double s = static_cast<double>(k) * h;
    const cplx k1 = rhs(s, g);
    const cplx k2 = rhs(s + 0.5 * h, g + 0.5 * h * k1);
    const cplx k3 = rhs(s + 0.5 * h, g + 0.5 * h * k2);
    const cplx k4 = rhs(s + h, g + h * k3);
    g += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return g;
}

// ---------------------------------------------------------------------------
// Ansatz system

struct AnsatzState {
  cplx gamma1;
  cplx gamma2;
  cplx alpha;
};

/// One Euler–Maruyama step of
///   dΓ₁ = Γ₁(k + c)dt - μ e^{-2iφ}Γ₂ dt
///   dΓ₂ = Γ₂(-k + c)dt
///   dα  = cα dt - √μ(Γ₁f + Γ₂f̄)dt - √μ Γ₂ e^{-iφ} dW
/// with k = iω + μ/2 and c chosen to keep Γ₁ real and Γ₁² - |Γ₂|² fixed.
inline AnsatzState ansatz_ode_step(const AnsatzState& s, double t, double dW, const ModelParams& p, double dt) {
  const double g1 = s.gamma1.real();
  if (std::abs(s.gamma1) < 1e-12 || !std::isfinite(g1)) {
    throw ParametrizationBreakdown("gamma1 reached zero at t=" + std::to_string(t));
  }
  const cplx k = p.decay_rate();
  const cplx e = p.phase.rotor(t);
  const cplx e2 = e * e;
  const cplx f = p.drive(t);
  const double sqmu = std::sqrt(p.mu);
  const double n2 = std::norm(s.gamma2);
  const double c_im = p.mu * (e2 * s.gamma2).imag() / g1 - p.omega;
  const double c_re = (p.mu * g1 * (e2 * s.gamma2).real() - 0.5 * p.mu * (g1 * g1 + n2)) / (g1 * g1 - n2);
  const cplx c{c_re, c_im};
  AnsatzState out;
  out.gamma1 = s.gamma1 + (s.gamma1 * (k + c) - p.mu * e2 * s.gamma2) * dt;
  out.gamma2 = s.gamma2 + s.gamma2 * (c - k) * dt;
  out.alpha = s.alpha + (c * s.alpha - sqmu * (s.gamma1 * f + s.gamma2 * std::conj(f))) * dt -
              sqmu * s.gamma2 * e * dW;
  if (!(std::abs(out.gamma1) >= 1e-12) || out.gamma1.real() <= 0.0) {
    throw ParametrizationBreakdown("gamma1 crossed zero at t=" + std::to_string(t + dt));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Squeezed track

struct SqueezeTrack {
  double dt = 0.0;
  std::vector<double> times;
  std::vector<cplx> gamma;
  std::vector<cplx> gamma1;
  std::vector<cplx> gamma2;
  std::vector<cplx> alpha;
  std::vector<cplx> kappa;
  std::vector<double> weight;  // |l(t)|²
  std::vector<double> dw;      // per step: the reference-measure dW used

  std::size_t size() const noexcept { return times.size(); }
};

/// <a> = (α - ᾱΓ)/√(1 - |Γ|²).
inline cplx mean_a(cplx alpha, cplx gamma) {
  return (alpha - std::conj(alpha) * gamma) / std::sqrt(1.0 - std::norm(gamma));
}

namespace detail {

/// α(t) recursion; dw(i, alpha_i) supplies the increment of step i.
template <class DwFn>
std::vector<cplx> squeezed_amplitude_impl(const std::vector<cplx>& gamma, cplx alpha0, const ModelParams& p, double dt,
                                          DwFn&& dw) {
  const double sqmu = std::sqrt(p.mu);
  const cplx k = p.decay_rate();
  const std::size_t n = gamma.size();
  for (const cplx g : gamma) require_gamma(g);

  // β = α √(1-|Γ|²) solves dβ = h β dt - √μ g dt - √μ Γ e^{-iφ} dW,
  // h = -k + μ e^{-2iφ}Γ, g = f + Γ f̄.
  std::vector<cplx> h(n), g(n), e(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) * dt;
    e[i] = p.phase.rotor(t);
    h[i] = -k + p.mu * e[i] * e[i] * gamma[i];
    const cplx f = p.drive(t);
    g[i] = f + gamma[i] * std::conj(f);
  }
  std::vector<cplx> out(n);
  const cplx beta0 = alpha0 * std::sqrt(1.0 - std::norm(gamma[0]));
  cplx big_g = 0.0;  // ∫₀ᵗ h
  cplx a_int = 0.0;  // ∫₀ᵗ e^{G(t)-G(s)} g(s) ds
  cplx b_int = 0.0;  // ∫₀ᵗ e^{G(t)-G(s)} Γ e^{-iφ} dW(s)
  out[0] = alpha0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const cplx dg = 0.5 * (h[i] + h[i + 1]) * dt;
    const cplx grow = std::exp(dg);
    big_g += dg;
    b_int = grow * (b_int + e[i] * gamma[i] * dw(i, out[i]));
    a_int = grow * (a_int + 0.5 * g[i] * dt) + 0.5 * g[i + 1] * dt;
    const cplx beta = beta0 * std::exp(big_g) - sqmu * (a_int + b_int);
    out[i + 1] = beta / std::sqrt(1.0 - std::norm(gamma[i + 1]));
  }
  return out;
}

}  // namespace detail

/// Eigenvalue α(t) on the path grid, for a precomputed Γ track (one entry per
/// grid point); the path holds the reference-measure dW. Itô (left-point)
/// sums for dW, trapezoid for the drift.
inline std::vector<cplx> squeezed_amplitude(const std::vector<cplx>& gamma, cplx alpha0, const ModelParams& p,
                                            const WienerPath& path) {
  if (gamma.size() != path.steps() + 1) throw GridMismatch("gamma track and path have different grids");
  return detail::squeezed_amplitude_impl(gamma, alpha0, p, path.dt(),
                                         [&](std::size_t i, cplx) { return path[i]; });
}

/// |l(t)|² = exp(∫ 2m dW - 2∫ m² dt), m = √μ Re(<a> e^{-iφ}), accumulated in log space.
inline std::vector<double> weight_track(const std::vector<cplx>& gamma, const std::vector<cplx>& alpha,
                                        const ModelParams& p, const WienerPath& path) {
  if (gamma.size() != path.steps() + 1 || alpha.size() != gamma.size()) {
    throw GridMismatch("tracks and path have different grids");
  }
  const double dt = path.dt();
  const double sqmu = std::sqrt(p.mu);
  // m responds to dW through α (dα = ... - √μ Γ₂ e^{-iφ} dW), with
  // diffusion coefficient sigma; the ∫ m dW sum carries the matching
  // ½ sigma (dW² - dt) correction.
  std::vector<double> m(gamma.size()), sigma(gamma.size());
  for (std::size_t i = 0; i < m.size(); ++i) {
    const cplx e = p.phase.rotor(static_cast<double>(i) * dt);
    const double g1 = 1.0 / std::sqrt(1.0 - std::norm(gamma[i]));
    const cplx g2 = g1 * gamma[i];
    const cplx da = -sqmu * g1 * (g2 * e - std::conj(g2 * e) * gamma[i]);
    m[i] = sqmu * (mean_a(alpha[i], gamma[i]) * e).real();
    sigma[i] = sqmu * (da * e).real();
  }
  std::vector<double> out(gamma.size());
  double log_w = 0.0;
  out[0] = 1.0;
  for (std::size_t i = 0; i + 1 < m.size(); ++i) {
    const double dw = path[i];
    log_w += 2.0 * m[i] * dw + sigma[i] * (dw * dw - dt) - (m[i] * m[i] + m[i + 1] * m[i + 1]) * dt;
    out[i + 1] = std::exp(log_w);
  }
  return out;
}

inline SqueezeTrack weight_track(SqueezeTrack track, const ModelParams& p, const WienerPath& path) {
  track.weight = weight_track(track.gamma, track.alpha, p, path);
  return track;
}

/// Full closed-form description of the posterior started from the squeezed
/// coherent state with ratio Γ(0) = gamma0 and eigenvalue alpha0, on the grid
/// of `path`. With `innovations` set, the path increments are read as the
/// innovation process and dW = dI + 2√μ Re(<a>e^{-iφ})dt is rebuilt step by
/// step, as the nonlinear filter does under NoiseMeasure::physical.
inline SqueezeTrack squeeze_track(cplx gamma0, cplx alpha0, const ModelParams& p, const WienerPath& path,
                                  bool innovations = false) {
  SqueezeTrack tr;
  tr.dt = path.dt();
  tr.gamma = riccati_track(gamma0, p, path.dt(), path.steps());
  const std::size_t n = tr.gamma.size();
  tr.times.resize(n);
  tr.gamma1.resize(n);
  tr.gamma2.resize(n);
  tr.kappa.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const cplx g = tr.gamma[i];
    tr.times[i] = static_cast<double>(i) * path.dt();
    tr.gamma1[i] = 1.0 / std::sqrt(1.0 - std::norm(g));
    tr.gamma2[i] = g * tr.gamma1[i];
    tr.kappa[i] = (1.0 + g) / (1.0 - g);
  }
  tr.dw.resize(path.steps());
  const double sqmu = std::sqrt(p.mu);
  tr.alpha = detail::squeezed_amplitude_impl(tr.gamma, alpha0, p, path.dt(), [&](std::size_t i, cplx a) {
    double dw = path[i];
    if (innovations) {
      const double t = static_cast<double>(i) * path.dt();
      dw += 2.0 * sqmu * (mean_a(a, tr.gamma[i]) * p.phase.rotor(t)).real() * path.dt();
    }
    tr.dw[i] = dw;
    return dw;
  });
  tr.weight = weight_track(tr.gamma, tr.alpha, p, WienerPath::from_increments(path.dt(), tr.dw));
  return tr;
}

/// Quadrature statistics of a squeezed posterior (Γ, α):
///   <X> + i<Y> = <a>,  ΔX = (4 Re κ)^{-1/2},  ΔY = |κ| (4 Re κ)^{-1/2}.
inline QuadratureStats squeezed_quadratures(cplx gamma, cplx alpha) {
  detail::require_gamma(gamma);
  const cplx kappa = (1.0 + gamma) / (1.0 - gamma);
  const cplx a = mean_a(alpha, gamma);
  const double s = 1.0 / std::sqrt(4.0 * kappa.real());
  return {a.real(), a.imag(), s, std::abs(kappa) * s};
}

/// |<β|ψ>|² for the squeezed posterior ψ with ratio Γ and eigenvalue α:
/// √(1-|Γ|²) exp(-|γ|² - Re(Γ γ̄²)), γ = β - <a>.
inline double coherent_overlap(cplx gamma, cplx alpha, cplx beta) {
  detail::require_gamma(gamma);
  const cplx d = beta - mean_a(alpha, gamma);
  return std::sqrt(1.0 - std::norm(gamma)) * std::exp(-std::norm(d) - (gamma * std::conj(d) * std::conj(d)).real());
}

inline std::vector<QuadratureStats> quadrature_track(const SqueezeTrack& track) {
  if (track.alpha.size() != track.gamma.size()) throw GridMismatch("track is incomplete");
  std::vector<QuadratureStats> out(track.gamma.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = squeezed_quadratures(track.gamma[i], track.alpha[i]);
  return out;
}

}  // namespace belavkin
