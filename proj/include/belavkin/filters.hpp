#pragma once

// Time stepping of the linear, nonlinear and density-matrix filters.
//
// All three equations share the diagonal generator K = iω(a†a + 1/2) + (μ/2)a†a.
// The default scheme integrates K exactly (ψ ← e^{-K dt}(ψ + rest)) and treats
// the remaining drift and the diffusion by Euler–Maruyama, adding the Milstein
// term ½ b'b (dW² - dt) unless Scheme::exponential_euler is chosen.
// Scheme::euler_maruyama is the textbook explicit update of the full equation.

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Cholesky>

#include "belavkin/error.hpp"
#include "belavkin/fock.hpp"
#include "belavkin/model.hpp"
#include "belavkin/wiener.hpp"

namespace belavkin {

enum class FilterKind { linear, nonlinear, density };
enum class Scheme { exponential_milstein, exponential_euler, euler_maruyama };

/// Which process the increments of a WienerPath stand for.
///  reference: the increments are dW itself, the Wiener process of the
///             reference (input) measure; the record is dq = dW + 2Re(e^{-iφ}f)dt.
///  physical:  the increments are the innovations dW - 2√μ Re(<a>e^{-iφ})dt,
///             a Wiener process under the output measure, so trajectories are
///             sampled with their physical probabilities.
enum class NoiseMeasure { reference, physical };

inline const char* to_string(FilterKind k) {
  switch (k) {
    case FilterKind::linear: return "linear";
    case FilterKind::nonlinear: return "nonlinear";
    case FilterKind::density: return "density";
  }
  return "?";
}

inline NoiseMeasure default_measure(FilterKind k) {
  return k == FilterKind::linear ? NoiseMeasure::reference : NoiseMeasure::physical;
}

struct StepOptions {
  Scheme scheme = Scheme::exponential_milstein;
  double max_norm_drift = 1e-3;    // nonlinear filter, before renormalization
  double positivity_floor = -1e-6;  // density filter, smallest eigenvalue
};

namespace detail {

inline std::string at_step(const std::string& what, std::size_t k, double t) {
  std::ostringstream os;
  os << what << " at step " << k << " (t=" << t << ")";
  return os.str();
}

/// Step constants that depend only on (params, dt).
struct Stepper {
  const ModelParams* p;
  double dt;
  double sqmu;
  Scheme scheme;
  Vector k;      // diagonal of K
  Vector decay;  // e^{-K dt}

  Stepper(const ModelParams& params, double step, Scheme s)
      : p(&params), dt(step), sqmu(std::sqrt(params.mu)), scheme(s), k(params.k_diagonal()) {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw DomainError("dt must be positive");
    decay = (-dt * k).array().exp();
    if (scheme == Scheme::euler_maruyama) decay.setOnes();
  }

  /// Linear filter, dW of the reference measure.
  void linear(Vector& v, double t, double dw) const {
    const cplx e = p->phase.rotor(t);
    const cplx f = p->drive(t);
    const Vector av = annihilate(v);
    Vector incr = (sqmu * e * dw) * av;
    if (f != cplx{}) incr += (sqmu * dt) * (std::conj(f) * av - f * create(v));
    if (scheme == Scheme::exponential_milstein) incr += (0.5 * p->mu * e * e * (dw * dw - dt)) * annihilate(av);
    if (scheme != Scheme::euler_maruyama) {
      v = decay.cwiseProduct(v + incr);
    } else {
      v += incr - dt * k.cwiseProduct(v);
    }
  }

  /// Nonlinear filter on a unit vector. `increment` is dW or the innovation
  /// depending on `measure`; returns the dW that was applied. The norm change
  /// before renormalization is stored in *drift when given.
  double nonlinear(Vector& v, double t, double increment, NoiseMeasure measure,
                   double max_drift, double* drift = nullptr) const {
    const cplx e = p->phase.rotor(t);
    const cplx f = p->drive(t);
    const Vector av = annihilate(v);
    const double m = sqmu * (v.dot(av) * e).real();
    const double innov = measure == NoiseMeasure::physical ? increment : increment - 2.0 * m * dt;
    const double dw = measure == NoiseMeasure::physical ? increment + 2.0 * m * dt : increment;

    // drift without K:  -√μ(a†f - a f̄)v - (m²/2)v + m√μ e a v
    // diffusion:        (√μ e a - m) v
    Vector u = (1.0 - 0.5 * m * m * dt - m * innov) * v + (sqmu * e * (m * dt + innov)) * av;
    if (f != cplx{}) u += (sqmu * dt) * (std::conj(f) * av - f * create(v));
    if (scheme == Scheme::exponential_milstein) {
      // b'b = L²v - 2m Lv + m²v - (|Lv|² + Re<v,L²v> - 2m²) v,  L = √μ e a
      const Vector aav = annihilate(av);
      const cplx l2 = p->mu * e * e;
      const double s2 = p->mu * av.squaredNorm() + (l2 * v.dot(aav)).real() - 2.0 * m * m;
      const double h = 0.5 * (innov * innov - dt);
      u += (h * l2) * aav - (h * 2.0 * m * sqmu * e) * av + (h * (m * m - s2)) * v;
    }
    if (scheme != Scheme::euler_maruyama) {
      u = decay.cwiseProduct(u);
    } else {
      u -= dt * k.cwiseProduct(v);
    }
    const double n = u.norm();
    if (!std::isfinite(n)) throw NumericalBlowup("non-finite amplitudes in the nonlinear filter");
    if (drift) *drift = n - 1.0;
    if (std::abs(n - 1.0) > max_drift) {
      throw StepSizeError("norm drift " + std::to_string(n - 1.0) +
                          " before renormalization exceeds " + std::to_string(max_drift));
    }
    v = u / n;
    return dw;
  }

  /// Density filter on a Hermitian unit-trace matrix; returns the dW applied.
  double density(Matrix& r, double t, double increment, NoiseMeasure measure) const {
    const Eigen::Index n = r.rows();
    const cplx e = p->phase.rotor(t);
    const cplx f = p->drive(t);

    cplx mean_a = 0.0;
    for (Eigen::Index i = 1; i < n; ++i) mean_a += std::sqrt(static_cast<double>(i)) * r(i, i - 1);
    const double m = sqmu * (mean_a * e).real();
    const double innov = measure == NoiseMeasure::physical ? increment : increment - 2.0 * m * dt;
    const double dw = measure == NoiseMeasure::physical ? increment + 2.0 * m * dt : increment;

    if (scheme != Scheme::euler_maruyama) {
      // Kraus form ρ -> MρM†/tr with M the linear-filter step for dW, positive by construction.
      Matrix x = r;
      for (Eigen::Index j = 0; j < n; ++j) {
        Vector c = x.col(j);
        linear(c, t, dw);
        x.col(j) = c;
      }
      Matrix y = x.adjoint();
      for (Eigen::Index j = 0; j < n; ++j) {
        Vector c = y.col(j);
        linear(c, t, dw);
        y.col(j) = c;
      }
      r = 0.5 * (y + y.adjoint());
      const double tr = r.trace().real();
      if (!std::isfinite(tr) || !(tr > 0.0)) throw NumericalBlowup("non-finite or vanishing trace in the density filter");
      r /= tr;
      return dw;
    }

    // A = a ρ (rows shifted up), B = ρ a (columns shifted right).
    Matrix A = Matrix::Zero(n, n);
    for (Eigen::Index i = 0; i + 1 < n; ++i) A.row(i) = std::sqrt(static_cast<double>(i + 1)) * r.row(i + 1);

    Matrix out = (1.0 - 2.0 * m * innov) * r;
    // innovation: √μ(e aρ + ē ρa†)
    out += (sqmu * innov * e) * A + (sqmu * innov * std::conj(e)) * A.adjoint();
    // jump term μ aρa†
    const double mdt = p->mu * dt;
    for (Eigen::Index j = 0; j + 1 < n; ++j) {
      const double sj = std::sqrt(static_cast<double>(j + 1));
      for (Eigen::Index i = 0; i + 1 < n; ++i) {
        out(i, j) += mdt * sj * std::sqrt(static_cast<double>(i + 1)) * r(i + 1, j + 1);
      }
    }
    // √μ [a f̄ - a† f, ρ] = √μ (f̄ A - f̄ B - f B† + f A†)
    if (f != cplx{}) {
      Matrix B = Matrix::Zero(n, n);
      for (Eigen::Index j = 1; j < n; ++j) B.col(j) = std::sqrt(static_cast<double>(j)) * r.col(j - 1);
      const cplx fb = std::conj(f);
      out += (sqmu * dt) * (fb * (A - B) + f * (A.adjoint() - B.adjoint()));
    }
    for (Eigen::Index j = 0; j < n; ++j) {
      for (Eigen::Index i = 0; i < n; ++i) out(i, j) -= dt * (k[i] + std::conj(k[j])) * r(i, j);
    }
    r = 0.5 * (out + out.adjoint());
    const double tr = r.trace().real();
    if (!std::isfinite(tr) || !(tr > 0.0)) throw NumericalBlowup("non-finite or vanishing trace in the density filter");
    r /= tr;
    return dw;
  }

  static void check_positive(const Matrix& r, double floor) {
    const Eigen::Index n = r.rows();
    Eigen::LLT<Matrix> llt(r - floor * Matrix::Identity(n, n));
    if (llt.info() == Eigen::Success) return;
    Eigen::SelfAdjointEigenSolver<Matrix> es(r, Eigen::EigenvaluesOnly);
    const double lmin = es.eigenvalues().minCoeff();
    if (lmin < floor) {
      throw StepSizeError("density matrix lost positivity (min eigenvalue " + std::to_string(lmin) + ")");
    }
  }
};

inline void check_linear(const Vector& v) {
  if (!std::isfinite(v.squaredNorm())) throw NumericalBlowup("non-finite amplitudes in the linear filter");
}

}  // namespace detail

/// One step of the linear filter  dψ = -(K + √μ(a†f - a f̄))ψ dt + √μ e^{-iφ} aψ dW.
inline QuantumState step_linear(const QuantumState& psi, double t, double dW, const ModelParams& p,
                                double dt, const StepOptions& opt = {}) {
  if (psi.dim() != p.dim) throw DimensionMismatch("state dimension differs from model dim");
  const detail::Stepper s(p, dt, opt.scheme);
  Vector v = psi.amps();
  s.linear(v, t, dW);
  detail::check_linear(v);
  return QuantumState::unnormalized(std::move(v));
}

/// One step of the nonlinear filter driven by the Wiener increment dW; the
/// innovation dW - 2√μ Re(<a>e^{-iφ})dt is formed internally. The result is
/// renormalized.
inline QuantumState step_nonlinear(const QuantumState& phi, double t, double dW, const ModelParams& p,
                                   double dt, const StepOptions& opt = {}) {
  if (phi.dim() != p.dim) throw DimensionMismatch("state dimension differs from model dim");
  if (!phi.is_normalized()) throw NormalizationError("nonlinear filter needs a normalized state");
  const detail::Stepper s(p, dt, opt.scheme);
  Vector v = phi.amps();
  s.nonlinear(v, t, dW, NoiseMeasure::reference, opt.max_norm_drift);
  return QuantumState(std::move(v), Normalization::normalized);
}

/// One step of the density-matrix filter driven by dW; re-Hermitized,
/// trace-renormalized and checked for positivity.
inline DensityMatrix step_density(const DensityMatrix& rho, double t, double dW, const ModelParams& p,
                                  double dt, const StepOptions& opt = {}) {
  if (rho.dim() != p.dim) throw DimensionMismatch("density dimension differs from model dim");
  const detail::Stepper s(p, dt, opt.scheme);
  Matrix r = rho.matrix();
  s.density(r, t, dW, NoiseMeasure::reference);
  detail::Stepper::check_positive(r, opt.positivity_floor);
  return DensityMatrix(std::move(r), DensityMatrix::Trusted{});
}

// ---------------------------------------------------------------------------
// Whole trajectories

/// Samples of the model taken when a record is produced, so that a replay can
/// detect that it was handed different parameters.
struct ParamsFingerprint {
  std::vector<double> values;

  static ParamsFingerprint of(const ModelParams& p, double t_final) {
    ParamsFingerprint fp;
    fp.values = {p.omega, p.mu, static_cast<double>(p.dim)};
    for (int i = 0; i <= 8; ++i) {
      const double t = t_final * i / 8.0;
      const cplx f = p.drive(t);
      fp.values.insert(fp.values.end(), {f.real(), f.imag(), p.phase(t)});
    }
    return fp;
  }

  bool matches(const ParamsFingerprint& o) const {
    if (values.size() != o.values.size()) return false;
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (std::abs(values[i] - o.values[i]) > 1e-12 * std::max(1.0, std::abs(values[i]))) return false;
    }
    return true;
  }
};

struct IntegrateOptions {
  StepOptions step;
  std::optional<NoiseMeasure> measure;  // default depends on the filter
  std::size_t record_every = 1;         // keep every n-th state (the last is always kept)
  std::size_t positivity_check_every = 64;
};

struct TrajectoryRecord {
  FilterKind kind = FilterKind::linear;
  double dt = 0.0;
  std::size_t steps = 0;
  std::size_t record_every = 1;
  std::vector<std::size_t> step_index;   // grid index of each kept state
  std::vector<double> times;             // t at each kept state
  std::vector<QuantumState> states;      // linear and nonlinear filters
  std::vector<DensityMatrix> densities;  // density filter
  std::vector<double> weights;           // linear filter: ||ψ(t)||²
  std::vector<double> record_q;          // per step: dq = dW + 2Re(e^{-iφ}f)dt
  std::vector<double> dw;                // per step: the Wiener increment dW
  ParamsFingerprint params;
};

namespace detail {

/// Runs a pure-state filter and reports every grid state through
/// on_state(k, t, v) and every increment through on_increment(k, dW, dq).
template <class OnState, class OnIncrement>
void run_pure(FilterKind kind, Vector v, const ModelParams& p, const WienerPath& path,
              const IntegrateOptions& opt, OnState&& on_state, OnIncrement&& on_increment) {
  const NoiseMeasure measure = opt.measure.value_or(default_measure(kind));
  const Stepper s(p, path.dt(), opt.step.scheme);
  const double dt = path.dt();
  on_state(std::size_t{0}, 0.0, static_cast<const Vector&>(v));
  for (std::size_t k = 0; k < path.steps(); ++k) {
    const double t = static_cast<double>(k) * dt;
    double dw = path[k];
    try {
      if (kind == FilterKind::linear) {
        if (measure == NoiseMeasure::physical) {
          const double nn = v.squaredNorm();
          const double m = s.sqmu * (v.dot(annihilate(v)) * p.phase.rotor(t)).real() / nn;
          dw += 2.0 * m * dt;
        }
        s.linear(v, t, dw);
        check_linear(v);
      } else {
        dw = s.nonlinear(v, t, dw, measure, opt.step.max_norm_drift);
      }
    } catch (const NumericalBlowup& e) {
      throw NumericalBlowup(at_step(e.what(), k, t), k, t);
    } catch (const StepSizeError& e) {
      throw StepSizeError(at_step(e.what(), k, t), k, t);
    }
    on_increment(k, dw, dw + p.record_offset(t) * dt);
    on_state(k + 1, static_cast<double>(k + 1) * dt, static_cast<const Vector&>(v));
  }
}

template <class OnState, class OnIncrement>
void run_density(Matrix r, const ModelParams& p, const WienerPath& path, const IntegrateOptions& opt,
                 OnState&& on_state, OnIncrement&& on_increment) {
  const NoiseMeasure measure = opt.measure.value_or(NoiseMeasure::physical);
  const Stepper s(p, path.dt(), opt.step.scheme);
  const double dt = path.dt();
  const std::size_t every = std::max<std::size_t>(1, opt.positivity_check_every);
  on_state(std::size_t{0}, 0.0, static_cast<const Matrix&>(r));
  for (std::size_t k = 0; k < path.steps(); ++k) {
    const double t = static_cast<double>(k) * dt;
    double dw = 0.0;
    try {
      dw = s.density(r, t, path[k], measure);
      if ((k + 1) % every == 0 || k + 1 == path.steps()) Stepper::check_positive(r, opt.step.positivity_floor);
    } catch (const NumericalBlowup& e) {
      throw NumericalBlowup(at_step(e.what(), k, t), k, t);
    } catch (const StepSizeError& e) {
      throw StepSizeError(at_step(e.what(), k, t), k, t);
    }
    on_increment(k, dw, dw + p.record_offset(t) * dt);
    on_state(k + 1, static_cast<double>(k + 1) * dt, static_cast<const Matrix&>(r));
  }
}

inline bool keep(std::size_t k, std::size_t steps, std::size_t every) {
  return k % every == 0 || k == steps;
}

}  // namespace detail

/// Integrates one filter along `path` from a pure initial state (the density
/// filter starts from its projector). Deterministic in (initial, p, path, opt).
inline TrajectoryRecord integrate(FilterKind kind, const QuantumState& initial, const ModelParams& p,
                                  const WienerPath& path, const IntegrateOptions& opt = {});

/// Density filter from a general initial density matrix.
inline TrajectoryRecord integrate(const DensityMatrix& initial, const ModelParams& p, const WienerPath& path,
                                  const IntegrateOptions& opt = {}) {
  p.validate();
  if (initial.dim() != p.dim) throw DimensionMismatch("initial density dimension differs from model dim");
  TrajectoryRecord rec;
  rec.kind = FilterKind::density;
  rec.dt = path.dt();
  rec.steps = path.steps();
  rec.record_every = std::max<std::size_t>(1, opt.record_every);
  rec.params = ParamsFingerprint::of(p, path.t_final());
  rec.record_q.resize(path.steps());
  rec.dw.resize(path.steps());
  detail::run_density(
      initial.matrix(), p, path, opt,
      [&](std::size_t k, double t, const Matrix& r) {
        if (!detail::keep(k, rec.steps, rec.record_every)) return;
        rec.step_index.push_back(k);
        rec.times.push_back(t);
        rec.densities.emplace_back(r, DensityMatrix::Trusted{});
      },
      [&](std::size_t k, double dw, double dq) {
        rec.dw[k] = dw;
        rec.record_q[k] = dq;
      });
  return rec;
}

inline TrajectoryRecord integrate(FilterKind kind, const QuantumState& initial, const ModelParams& p,
                                  const WienerPath& path, const IntegrateOptions& opt) {
  p.validate();
  if (initial.dim() != p.dim) throw DimensionMismatch("initial state dimension differs from model dim");
  if (kind == FilterKind::density) {
    return integrate(DensityMatrix::from_state(initial.normalized()), p, path, opt);
  }
  TrajectoryRecord rec;
  rec.kind = kind;
  rec.dt = path.dt();
  rec.steps = path.steps();
  rec.record_every = std::max<std::size_t>(1, opt.record_every);
  rec.params = ParamsFingerprint::of(p, path.t_final());
  rec.record_q.resize(path.steps());
  rec.dw.resize(path.steps());
  Vector v = kind == FilterKind::nonlinear ? initial.normalized().amps() : initial.amps();
  detail::run_pure(
      kind, std::move(v), p, path, opt,
      [&](std::size_t k, double t, const Vector& x) {
        if (!detail::keep(k, rec.steps, rec.record_every)) return;
        rec.step_index.push_back(k);
        rec.times.push_back(t);
        if (kind == FilterKind::linear) {
          rec.weights.push_back(x.squaredNorm());
          rec.states.push_back(QuantumState::unnormalized(x));
        } else {
          rec.states.emplace_back(x, Normalization::normalized);
        }
      },
      [&](std::size_t k, double dw, double dq) {
        rec.dw[k] = dw;
        rec.record_q[k] = dq;
      });
  return rec;
}

/// Recovers dW from an observed record (dW = dq - 2Re(e^{-iφ}f)dt) and runs
/// the linear filter on it. States are kept at the record's stride.
inline TrajectoryRecord replay_linear_from_record(const QuantumState& initial, const ModelParams& p,
                                                  const TrajectoryRecord& record, StepOptions step = {}) {
  if (!record.params.matches(ParamsFingerprint::of(p, record.dt * static_cast<double>(record.steps)))) {
    throw ParamsMismatch("model parameters differ from those that produced the record");
  }
  std::vector<double> dw(record.record_q.size());
  for (std::size_t k = 0; k < dw.size(); ++k) {
    const double t = static_cast<double>(k) * record.dt;
    dw[k] = record.record_q[k] - p.record_offset(t) * record.dt;
  }
  IntegrateOptions opt;
  opt.step = step;
  opt.measure = NoiseMeasure::reference;
  opt.record_every = record.record_every;
  return integrate(FilterKind::linear, initial, p, WienerPath::from_increments(record.dt, std::move(dw)), opt);
}

}  // namespace belavkin
