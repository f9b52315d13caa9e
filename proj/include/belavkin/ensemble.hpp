#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <condition_variable>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "belavkin/analytic.hpp"
#include "belavkin/error.hpp"
#include "belavkin/filters.hpp"
#include "belavkin/fock.hpp"
#include "belavkin/model.hpp"
#include "belavkin/wiener.hpp"

namespace belavkin {

/// Initial state descriptor, resolved against a truncation.
struct InitialState {
  enum class Kind { vacuum, coherent, squeezed, amplitudes };

  Kind kind = Kind::vacuum;
  cplx alpha{};      // coherent amplitude / squeezed eigenvalue
  cplx gamma{};      // squeezing ratio Γ(0), |Γ| < 1
  Vector amps;       // explicit amplitudes (normalized on build)

  static InitialState vacuum() { return {}; }
  static InitialState coherent(cplx a) { return {Kind::coherent, a, {}, {}}; }
  static InitialState squeezed(cplx g, cplx a) { return {Kind::squeezed, a, g, {}}; }
  static InitialState explicit_amplitudes(Vector v) { return {Kind::amplitudes, {}, {}, std::move(v)}; }

  QuantumState build(std::size_t dim) const {
    switch (kind) {
      case Kind::vacuum: return QuantumState::vacuum(dim);
      case Kind::coherent: return coherent_state(alpha, dim);
      case Kind::squeezed: return squeezed_coherent_state(SqueezeParams::from_gamma(gamma, alpha), dim);
      case Kind::amplitudes:
        if (static_cast<std::size_t>(amps.size()) != dim) throw DimensionMismatch("explicit amplitudes have the wrong dimension");
        return QuantumState::normalize(amps);
    }
    throw DomainError("unknown initial state");
  }
};

struct EnsembleSpec {
  ModelParams params;
  FilterKind filter = FilterKind::nonlinear;
  InitialState initial;
  std::size_t n_traj = 1;
  std::uint64_t base_seed = 0;
  std::size_t first_trajectory = 0;  // trajectories are streams first..first+n_traj-1
  double dt = 1e-4;
  double t_final = 1.0;

  std::size_t record_every = 1;  // must divide the number of steps
  Scheme scheme = Scheme::exponential_milstein;
  std::optional<NoiseMeasure> measure;
  bool mean_state = true;        // accumulate the averaged density matrix
  std::size_t workers = 0;       // 0: hardware concurrency
  std::size_t block_size = 8;    // trajectories per partial summary
  std::optional<std::filesystem::path> spill_dir;

  std::size_t steps() const { return grid_steps(t_final, dt); }

  void validate() const {
    params.validate();
    if (n_traj < 1) throw DomainError("n_traj must be >= 1");
    if (!(t_final > 0.0)) throw DomainError("t_final must be > 0");
    const std::size_t n = steps();
    if (record_every == 0 || n % record_every != 0) throw GridMismatch("record_every must divide the number of steps");
    if (block_size == 0) throw DomainError("block_size must be >= 1");
    if (initial.kind == InitialState::Kind::squeezed && !(std::abs(initial.gamma) < 1.0)) {
      throw DomainError("|gamma0| must be < 1");
    }
  }
};

/// Self-normalized weighted mean with the moments needed for its standard
/// error, updated with shifted sums (stable one-pass; unit weights reduce to
/// Welford's recurrence).
struct WeightedMoments {
  std::size_t n = 0;
  double w = 0.0;     // Σ w
  double w2 = 0.0;    // Σ w²
  double mean = 0.0;  // Σ w x / Σ w
  double q = 0.0;     // Σ w² (x - mean)²
  double r = 0.0;     // Σ w² (x - mean)

  void add(double weight, double x) {
    WeightedMoments one;
    one.n = 1;
    one.w = weight;
    one.w2 = weight * weight;
    one.mean = x;
    merge(one);
  }

  void merge(const WeightedMoments& o) {
    if (o.n == 0) return;
    if (n == 0) {
      *this = o;
      return;
    }
    const double wt = w + o.w;
    const double m = mean + (o.w / wt) * (o.mean - mean);
    const double da = m - mean;
    const double db = m - o.mean;
    q = (q - 2.0 * da * r + da * da * w2) + (o.q - 2.0 * db * o.r + db * db * o.w2);
    r = (r - da * w2) + (o.r - db * o.w2);
    n += o.n;
    w = wt;
    w2 += o.w2;
    mean = m;
  }

  double standard_error() const {
    if (n < 2 || w == 0.0) return 0.0;
    const double c = static_cast<double>(n) / static_cast<double>(n - 1);
    return std::sqrt(std::max(0.0, q) * c) / w;
  }
};

struct EnsembleSummary {
  std::size_t n_traj = 0;
  std::vector<double> times;
  std::vector<DensityMatrix> mean_state;
  std::vector<QuadratureStats> mean_quadratures;
  std::vector<QuadratureStats> quadrature_stderr;
  std::vector<double> weight_mean;    // linear filter: plain average of ||ψ||²
  std::vector<double> weight_stderr;
};

namespace detail {

struct Partial {
  std::vector<Matrix> rho;  // Σ w ρ̂
  std::vector<std::array<WeightedMoments, 4>> quad;
  std::vector<WeightedMoments> weight;

  explicit Partial(std::size_t points, std::size_t dim, bool with_rho) : quad(points), weight(points) {
    if (with_rho) rho.assign(points, Matrix::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim)));
  }

  void add(std::size_t i, double w, const QuadratureStats& s) {
    quad[i][0].add(w, s.mean_x);
    quad[i][1].add(w, s.mean_y);
    quad[i][2].add(w, s.dx);
    quad[i][3].add(w, s.dy);
  }

  void merge(const Partial& o) {
    for (std::size_t i = 0; i < quad.size(); ++i) {
      for (std::size_t j = 0; j < 4; ++j) quad[i][j].merge(o.quad[i][j]);
      weight[i].merge(o.weight[i]);
      if (!rho.empty()) rho[i] += o.rho[i];
    }
  }
};

inline void put_u64(std::ofstream& out, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(b, 8);
}

inline void put_f64(std::ofstream& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

}  // namespace detail

/// Trajectory spill file: u64 rows, u64 cols (1 for state vectors), u64 number
/// of stored states, f64 spacing between them; then each state row-major as
/// (re, im) f64 pairs. All values little-endian.
class SpillWriter {
 public:
  SpillWriter(const std::filesystem::path& file, std::size_t rows, std::size_t cols, std::size_t count, double dt)
      : out_(file, std::ios::binary | std::ios::trunc) {
    if (!out_) throw Error("cannot open spill file " + file.string());
    detail::put_u64(out_, rows);
    detail::put_u64(out_, cols);
    detail::put_u64(out_, count);
    detail::put_f64(out_, dt);
  }

  template <class Derived>
  void write(const Eigen::MatrixBase<Derived>& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) {
        detail::put_f64(out_, m(i, j).real());
        detail::put_f64(out_, m(i, j).imag());
      }
    }
  }

  void close() {
    out_.close();
    if (!out_) throw Error("failed writing spill file");
  }

 private:
  std::ofstream out_;
};

struct SpillData {
  std::size_t rows = 0, cols = 0, count = 0;
  double dt = 0.0;
  std::vector<Matrix> states;
};

inline SpillData read_spill(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error("cannot open spill file " + file.string());
  auto u64 = [&] {
    unsigned char b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    if (!in) throw Error("truncated spill file " + file.string());
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
  };
  auto f64 = [&] { return std::bit_cast<double>(u64()); };
  SpillData d;
  d.rows = u64();
  d.cols = u64();
  d.count = u64();
  d.dt = f64();
  d.states.reserve(d.count);
  for (std::size_t s = 0; s < d.count; ++s) {
    Matrix m(static_cast<Eigen::Index>(d.rows), static_cast<Eigen::Index>(d.cols));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) {
        const double re = f64();
        m(i, j) = cplx{re, f64()};
      }
    }
    d.states.push_back(std::move(m));
  }
  return d;
}

inline std::filesystem::path spill_path(const std::filesystem::path& dir, std::size_t trajectory) {
  return dir / ("traj_" + std::to_string(trajectory) + ".bin");
}

namespace detail {

inline void run_one(const EnsembleSpec& spec, const QuantumState& init, std::size_t traj, std::size_t steps,
                    Partial& acc) {
  const WienerPath path = WienerPath::generate(spec.base_seed, spec.dt, steps, traj);
  IntegrateOptions opt;
  opt.step.scheme = spec.scheme;
  opt.measure = spec.measure;
  const std::size_t every = spec.record_every;
  const std::size_t points = steps / every + 1;
  std::optional<SpillWriter> spill;
  const std::size_t n = spec.params.dim;
  if (spec.spill_dir) {
    spill.emplace(spill_path(*spec.spill_dir, traj), n, spec.filter == FilterKind::density ? n : 1, points,
                  spec.dt * static_cast<double>(every));
  }
  auto no_increment = [](std::size_t, double, double) {};
  if (spec.filter == FilterKind::density) {
    run_density(
        DensityMatrix::from_state(init.normalized()).matrix(), spec.params, path, opt,
        [&](std::size_t k, double, const Matrix& r) {
          if (k % every != 0) return;
          const std::size_t i = k / every;
          acc.add(i, 1.0, quadrature_stats(DensityMatrix(r, DensityMatrix::Trusted{})));
          acc.weight[i].add(1.0, 1.0);
          if (!acc.rho.empty()) acc.rho[i] += r;
          if (spill) spill->write(r);
        },
        no_increment);
  } else {
    const bool linear = spec.filter == FilterKind::linear;
    Vector v = linear ? init.amps() : init.normalized().amps();
    run_pure(
        spec.filter, std::move(v), spec.params, path, opt,
        [&](std::size_t k, double, const Vector& x) {
          if (k % every != 0) return;
          const std::size_t i = k / every;
          const double w = linear ? x.squaredNorm() : 1.0;
          const Vector u = linear ? Vector(x / std::sqrt(w)) : x;
          acc.add(i, w, quadrature_stats_raw(u));
          acc.weight[i].add(1.0, w);
          if (!acc.rho.empty()) acc.rho[i].noalias() += x * x.adjoint();
          if (spill) spill->write(x);
        },
        no_increment);
  }
  if (spill) spill->close();
}

}  // namespace detail

inline std::size_t hardware_workers() {
  const unsigned h = std::thread::hardware_concurrency();
  return h == 0 ? 1 : h;
}

/// Runs spec.n_traj independent trajectories (trajectory i is driven by
/// stream i of base_seed) and accumulates statistics online. Partial sums over
/// fixed blocks are merged in block order, so the summary is bit-identical for
/// any worker count. A failing trajectory aborts the whole ensemble.
inline EnsembleSummary run_ensemble(const EnsembleSpec& spec) {
  spec.validate();
  const std::size_t steps = spec.steps();
  const std::size_t points = steps / spec.record_every + 1;
  const std::size_t dim = spec.params.dim;
  const QuantumState init = spec.initial.build(dim);
  if (spec.spill_dir) std::filesystem::create_directories(*spec.spill_dir);

  const std::size_t n_blocks = (spec.n_traj + spec.block_size - 1) / spec.block_size;
  const std::size_t workers = std::clamp<std::size_t>(spec.workers == 0 ? hardware_workers() : spec.workers, 1, n_blocks);
  const std::size_t window = 2 * workers;  // blocks allowed ahead of the merge front

  detail::Partial total(points, dim, spec.mean_state);
  std::mutex mu;
  std::condition_variable cv;
  std::map<std::size_t, detail::Partial> done;
  std::size_t next_block = 0;
  std::size_t merged = 0;
  std::optional<std::pair<std::size_t, std::string>> failure;

  auto worker = [&] {
    for (;;) {
      std::size_t b;
      {
        std::unique_lock lk(mu);
        cv.wait(lk, [&] { return failure || next_block >= n_blocks || next_block < merged + window; });
        if (failure || next_block >= n_blocks) return;
        b = next_block++;
      }
      detail::Partial part(points, dim, spec.mean_state);
      const std::size_t lo = spec.first_trajectory + b * spec.block_size;
      const std::size_t hi = spec.first_trajectory + std::min(spec.n_traj, (b + 1) * spec.block_size);
      for (std::size_t i = lo; i < hi; ++i) {
        try {
          detail::run_one(spec, init, i, steps, part);
        } catch (const std::exception& e) {
          std::lock_guard lk(mu);
          if (!failure || i < failure->first) failure = {i, e.what()};
          cv.notify_all();
          return;
        }
        std::lock_guard lk(mu);
        if (failure) return;
      }
      std::unique_lock lk(mu);
      done.emplace(b, std::move(part));
      while (!done.empty() && done.begin()->first == merged) {
        total.merge(done.begin()->second);
        done.erase(done.begin());
        ++merged;
      }
      cv.notify_all();
    }
  };

  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) {
    throw TrajectoryFailure("trajectory " + std::to_string(failure->first) + " failed: " + failure->second,
                            failure->first);
  }

  EnsembleSummary s;
  s.n_traj = spec.n_traj;
  for (std::size_t i = 0; i < points; ++i) {
    s.times.push_back(static_cast<double>(i * spec.record_every) * spec.dt);
    const auto& q = total.quad[i];
    s.mean_quadratures.push_back({q[0].mean, q[1].mean, q[2].mean, q[3].mean});
    s.quadrature_stderr.push_back(
        {q[0].standard_error(), q[1].standard_error(), q[2].standard_error(), q[3].standard_error()});
    s.weight_mean.push_back(total.weight[i].mean);
    s.weight_stderr.push_back(total.weight[i].standard_error());
    if (spec.mean_state) {
      Matrix m = total.rho[i] / q[0].w;
      m = 0.5 * (m + m.adjoint());
      s.mean_state.emplace_back(std::move(m), DensityMatrix::Trusted{});
    }
  }
  return s;
}

// ---------------------------------------------------------------------------
// Unconditional evolution

/// dρ/dt = -i[H,ρ] - (μ/2){a†a,ρ} + √μ[a f̄ - a†f, ρ] + μ aρa†
inline Matrix master_rhs(const ModelParams& p, const Vector& k, const Matrix& r, double t) {
  const Eigen::Index n = r.rows();
  const cplx f = p.drive(t);
  Matrix out(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      cplx v = -(k[i] + std::conj(k[j])) * r(i, j);
      if (i + 1 < n && j + 1 < n) {
        v += p.mu * std::sqrt(static_cast<double>((i + 1) * (j + 1))) * r(i + 1, j + 1);
      }
      out(i, j) = v;
    }
  }
  if (f != cplx{}) {
    Matrix A = Matrix::Zero(n, n);  // aρ
    Matrix B = Matrix::Zero(n, n);  // ρa
    for (Eigen::Index i = 0; i + 1 < n; ++i) A.row(i) = std::sqrt(static_cast<double>(i + 1)) * r.row(i + 1);
    for (Eigen::Index j = 1; j < n; ++j) B.col(j) = std::sqrt(static_cast<double>(j)) * r.col(j - 1);
    out += std::sqrt(p.mu) * (std::conj(f) * (A - B) + f * (A.adjoint() - B.adjoint()));
  }
  return out;
}

/// Noise-free part of the density filter integrated by classical RK4. Returns
/// the states at t = 0, every·dt, ..., t_final.
inline std::vector<DensityMatrix> unconditional_evolution(const ModelParams& p, const DensityMatrix& initial, double dt,
                                                          double t_final, std::size_t record_every = 1) {
  p.validate();
  if (initial.dim() != p.dim) throw DimensionMismatch("initial density dimension differs from model dim");
  const std::size_t steps = grid_steps(t_final, dt);
  if (record_every == 0 || steps % record_every != 0) throw GridMismatch("record_every must divide the number of steps");
  const Vector k = p.k_diagonal();
  Matrix r = initial.matrix();
  std::vector<DensityMatrix> out;
  out.emplace_back(r, DensityMatrix::Trusted{});
  for (std::size_t s = 0; s < steps; ++s) {
    const double t = static_cast<double>(s) * dt;
    const Matrix k1 = master_rhs(p, k, r, t);
    const Matrix k2 = master_rhs(p, k, r + 0.5 * dt * k1, t + 0.5 * dt);
    const Matrix k3 = master_rhs(p, k, r + 0.5 * dt * k2, t + 0.5 * dt);
    const Matrix k4 = master_rhs(p, k, r + dt * k3, t + dt);
    r += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    r = 0.5 * (r + r.adjoint());
    if (!std::isfinite(r.trace().real())) {
      throw NumericalBlowup(detail::at_step("non-finite density in the master equation", s, t), s, t);
    }
    const bool keep = (s + 1) % record_every == 0;
    if (keep || (s + 1) % 64 == 0) {
      try {
        detail::Stepper::check_positive(r, -1e-6);
      } catch (const StepSizeError& e) {
        throw StepSizeError(detail::at_step(e.what(), s, t), s, t);
      }
    }
    if (keep) out.emplace_back(r, DensityMatrix::Trusted{});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Convergence order

enum class ConvergenceScenario { linear_coherent, deterministic_mu0, nonlinear_squeezed };

inline std::optional<ConvergenceScenario> parse_scenario(const std::string& s) {
  if (s == "linear_coherent") return ConvergenceScenario::linear_coherent;
  if (s == "deterministic_mu0") return ConvergenceScenario::deterministic_mu0;
  if (s == "nonlinear_squeezed") return ConvergenceScenario::nonlinear_squeezed;
  return std::nullopt;
}

struct ConvergenceReport {
  std::vector<double> dts;
  std::vector<double> errors;  // mean over seeds, same order as dts
  std::optional<double> order; // absent when the error curve is not monotone
  std::string diagnostics;
};

namespace detail {

/// Terminal-state error of one scenario on one path (already at the wanted dt).
/// `fine` is the finest path of the same Brownian motion, for path oracles.
inline double scenario_error(ConvergenceScenario sc, const WienerPath& path, const WienerPath& fine) {
  switch (sc) {
    case ConvergenceScenario::linear_coherent: {
      // ψ stays proportional to |α(t)⟩; oracle |l|² from the closed form on the finest path.
      ModelParams p;
      p.omega = 1.0;
      p.mu = 0.5;
      p.phase = Phase::constant(0.3);
      p.dim = 32;
      const cplx a0 = 1.0;
      IntegrateOptions o;
      o.step.scheme = Scheme::exponential_euler;
      o.record_every = path.steps();
      const auto rec = integrate(FilterKind::linear, coherent_state(a0, p.dim), p, path, o);
      std::vector<cplx> g(fine.steps() + 1, 0.0), al(fine.steps() + 1);
      for (std::size_t i = 0; i < al.size(); ++i) al[i] = coherent_amplitude(a0, p, static_cast<double>(i) * fine.dt());
      const double w = weight_track(g, al, p, fine).back();
      const Vector coh = coherent_state(al.back(), p.dim).amps();
      const Vector& psi = rec.states.back().amps();
      const cplx ov = coh.dot(psi);
      const cplx c = std::sqrt(w) * (std::abs(ov) > 0.0 ? ov / std::abs(ov) : cplx{1.0});
      return (psi - c * coh).norm();
    }
    case ConvergenceScenario::deterministic_mu0: {
      ModelParams p;
      p.omega = 1.0;
      p.mu = 0.0;
      p.dim = 32;
      const cplx a0 = 1.0;
      IntegrateOptions o;
      o.step.scheme = Scheme::euler_maruyama;
      o.record_every = path.steps();
      const auto rec = integrate(FilterKind::linear, coherent_state(a0, p.dim), p, path, o);
      const double t = path.t_final();
      // free evolution: amps[n] e^{-iω(n+½)t}
      Vector exact = coherent_state(a0, p.dim).amps();
      for (Eigen::Index n = 0; n < exact.size(); ++n) exact[n] *= std::polar(1.0, -p.omega * (n + 0.5) * t);
      return (rec.states.back().amps() - exact).norm();
    }
    case ConvergenceScenario::nonlinear_squeezed: {
      ModelParams p;
      p.omega = 1.0;
      p.mu = 0.04;
      p.phase = Phase::sweep(0.05);
      p.dim = 64;
      IntegrateOptions o;
      o.step.scheme = Scheme::exponential_euler;
      o.record_every = path.steps();
      const auto rec = integrate(FilterKind::nonlinear, squeezed_coherent_state(SqueezeParams::from_gamma(0.8, 1.0), p.dim),
                                 p, path, o);
      const cplx g = riccati_gamma(0.8, p, path.t_final());
      return std::abs(quadrature_stats(rec.states.back()).dx - squeezed_quadratures(g, 0.0).dx);
    }
  }
  return 0.0;
}

inline double scenario_t_final(ConvergenceScenario sc) {
  return sc == ConvergenceScenario::nonlinear_squeezed ? 5.0 : 1.0;
}

}  // namespace detail

/// Step sizes that keep every run of the scenario inside the step-size limits.
inline std::vector<double> default_dt_list(ConvergenceScenario sc) {
  if (sc == ConvergenceScenario::nonlinear_squeezed) return {1e-3, 2.5e-4, 6.25e-5};
  return {4e-3, 1e-3, 2.5e-4};
}

/// Strong-error convergence study: for each seed one Brownian path on the
/// finest grid, summed into the coarser grids. dt_list must be geometric with
/// ratio 4. The order is the least-squares slope of log(error) vs log(dt).
inline ConvergenceReport convergence_order(ConvergenceScenario sc, std::vector<double> dt_list, std::size_t n_seeds,
                                           std::uint64_t base_seed = 2024) {
  if (dt_list.size() < 2) throw DomainError("need at least two step sizes");
  if (n_seeds < 1) throw DomainError("need at least one seed");
  std::sort(dt_list.begin(), dt_list.end(), std::greater<>());
  for (std::size_t i = 0; i + 1 < dt_list.size(); ++i) {
    if (std::abs(dt_list[i] / dt_list[i + 1] - 4.0) > 1e-9) throw DomainError("dt_list must be geometric with ratio 4");
  }
  const double t_final = detail::scenario_t_final(sc);
  const double finest = dt_list.back();
  const std::size_t fine_steps = grid_steps(t_final, finest);

  ConvergenceReport rep;
  rep.dts = dt_list;
  rep.errors.assign(dt_list.size(), 0.0);
  for (std::size_t s = 0; s < n_seeds; ++s) {
    const WienerPath fine = WienerPath::generate(base_seed, finest, fine_steps, s);
    for (std::size_t j = 0; j < dt_list.size(); ++j) {
      const auto factor = static_cast<std::size_t>(std::llround(dt_list[j] / finest));
      const WienerPath path = factor == 1 ? fine : fine.coarsen(factor);
      rep.errors[j] += detail::scenario_error(sc, path, fine) / static_cast<double>(n_seeds);
    }
  }
  bool monotone = true;
  for (std::size_t j = 0; j + 1 < rep.errors.size(); ++j) monotone = monotone && rep.errors[j + 1] < rep.errors[j];

  std::ostringstream diag;
  for (std::size_t j = 0; j < rep.dts.size(); ++j) diag << "dt=" << rep.dts[j] << " error=" << rep.errors[j] << "\n";
  if (!monotone) {
    diag << "error does not decrease monotonically; no order reported\n";
  } else {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(rep.dts.size());
    for (std::size_t j = 0; j < rep.dts.size(); ++j) {
      const double x = std::log(rep.dts[j]);
      const double y = std::log(rep.errors[j]);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    rep.order = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    diag << "order=" << *rep.order << "\n";
  }
  rep.diagnostics = diag.str();
  return rep;
}

}  // namespace belavkin
