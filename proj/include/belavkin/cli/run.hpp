#pragma once

// Command pipelines: single trajectories, ensembles and the squeezing
// relaxation sweep over μ.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "belavkin/analytic.hpp"
#include "belavkin/cli/config.hpp"
#include "belavkin/cli/table.hpp"
#include "belavkin/ensemble.hpp"
#include "belavkin/filters.hpp"
#include "belavkin/fock.hpp"
#include "belavkin/wiener.hpp"

namespace belavkin::cli {

/// Largest deviations between a numerical nonlinear-filter run and the
/// closed-form squeezed track on the same increments.
struct Comparison {
  double max_dx = 0.0;
  double max_dy = 0.0;
  double max_mean_x = 0.0;
  double max_mean_y = 0.0;

  std::string summary() const {
    std::ostringstream s;
    s << std::setprecision(6) << "comparison with closed form: max |dX difference| = " << max_dx
      << ", max |dY difference| = " << max_dy << ", max |meanX difference| = " << max_mean_x
      << ", max |meanY difference| = " << max_mean_y;
    return s.str();
  }
};

struct RunResult {
  Table table;
  std::optional<Comparison> comparison;
};

namespace detail {

inline FilterKind filter_kind(RunConfig::Filter f) {
  switch (f) {
    case RunConfig::Filter::linear: return FilterKind::linear;
    case RunConfig::Filter::density: return FilterKind::density;
    default: return FilterKind::nonlinear;
  }
}

struct RowValues {
  QuadratureStats q;
  double norm = 1.0;
  double weight = 1.0;
  double fidelity = 0.0;
  double record_q = 0.0;
};

inline std::vector<double> select(double t, const RowValues& v, const std::vector<std::string>& fields) {
  std::vector<double> row{t};
  for (const auto& f : fields) {
    if (f == "meanX") row.push_back(v.q.mean_x);
    else if (f == "meanY") row.push_back(v.q.mean_y);
    else if (f == "dX") row.push_back(v.q.dx);
    else if (f == "dY") row.push_back(v.q.dy);
    else if (f == "norm") row.push_back(v.norm);
    else if (f == "weight") row.push_back(v.weight);
    else if (f == "fidelity_to_asymptotic") row.push_back(v.fidelity);
    else if (f == "record_q") row.push_back(v.record_q);
    else throw DomainError("unknown output field " + f);
  }
  return row;
}

inline bool wants(const std::vector<std::string>& fields, const std::string& f) {
  return std::find(fields.begin(), fields.end(), f) != fields.end();
}

inline double overlap_with_coherent(const Vector& unit, cplx beta, std::size_t dim) {
  return std::min(1.0, std::norm(coherent_state(beta, dim).amps().dot(unit)));
}

inline double overlap_with_coherent(const Matrix& rho, cplx beta, std::size_t dim) {
  const Vector b = coherent_state(beta, dim).amps();
  return std::clamp(b.dot(rho * b).real(), 0.0, 1.0);
}

}  // namespace detail

/// One trajectory on the path generated from the configured seed.
inline RunResult run_single(const RunConfig& c) {
  const ModelParams p = c.model_params();
  const std::size_t steps = c.steps();
  const std::size_t every = c.run.record_every;
  const auto& fields = c.output.fields;
  const WienerPath path = WienerPath::generate(c.run.seed, c.run.dt, steps);
  const bool need_fidelity = detail::wants(fields, "fidelity_to_asymptotic");

  RunResult res;
  res.table.columns = {"t"};
  res.table.columns.insert(res.table.columns.end(), fields.begin(), fields.end());

  auto stride_q = [&](const std::vector<double>& dq, std::size_t k) {
    double s = 0.0;
    for (std::size_t j = k - std::min(k, every); j < k; ++j) s += dq[j];
    return s;
  };

  if (c.run.filter == RunConfig::Filter::analytic) {
    const cplx g0 = c.run.initial == RunConfig::Initial::squeezed ? c.run.gamma0 : cplx{};
    const cplx a0 = c.run.initial == RunConfig::Initial::vacuum ? cplx{} : c.run.alpha0;
    const SqueezeTrack tr = squeeze_track(g0, a0, p, path, true);
    for (std::size_t k = 0; k <= steps; k += every) {
      const double t = tr.times[k];
      detail::RowValues v;
      v.q = squeezed_quadratures(tr.gamma[k], tr.alpha[k]);
      v.weight = tr.weight[k];
      if (need_fidelity) v.fidelity = std::min(1.0, coherent_overlap(tr.gamma[k], tr.alpha[k], asymptotic_amplitude(p, t)));
      if (k > 0) {
        double s = 0.0;
        for (std::size_t j = k - every; j < k; ++j) {
          s += tr.dw[j] + p.record_offset(static_cast<double>(j) * c.run.dt) * c.run.dt;
        }
        v.record_q = s;
      }
      res.table.rows.push_back(detail::select(t, v, fields));
    }
    return res;
  }

  const FilterKind kind = detail::filter_kind(c.run.filter);
  IntegrateOptions opt;
  opt.step.scheme = c.run.scheme;
  opt.record_every = every;
  const QuantumState init = c.initial_state().build(c.model.dim);
  const TrajectoryRecord rec = integrate(kind, init, p, path, opt);

  for (std::size_t i = 0; i < rec.times.size(); ++i) {
    const double t = rec.times[i];
    const std::size_t k = rec.step_index[i];
    detail::RowValues v;
    v.record_q = stride_q(rec.record_q, k);
    const cplx beta = need_fidelity ? asymptotic_amplitude(p, t) : cplx{};
    if (kind == FilterKind::density) {
      const DensityMatrix& r = rec.densities[i];
      v.q = quadrature_stats(r);
      v.norm = r.trace();
      if (need_fidelity) v.fidelity = detail::overlap_with_coherent(r.matrix(), beta, c.model.dim);
    } else {
      const Vector& x = rec.states[i].amps();
      const double n2 = x.squaredNorm();
      const Vector u = x / std::sqrt(n2);
      v.q = belavkin::detail::quadrature_stats_raw(u);
      v.norm = std::sqrt(n2);
      v.weight = kind == FilterKind::linear ? rec.weights[i] : 1.0;
      if (need_fidelity) v.fidelity = detail::overlap_with_coherent(u, beta, c.model.dim);
    }
    res.table.rows.push_back(detail::select(t, v, fields));
  }

  if (kind == FilterKind::nonlinear && c.run.initial != RunConfig::Initial::vacuum) {
    const cplx g0 = c.run.initial == RunConfig::Initial::squeezed ? c.run.gamma0 : cplx{};
    const SqueezeTrack tr = squeeze_track(g0, c.run.alpha0, p, WienerPath::from_increments(c.run.dt, rec.dw));
    Comparison cmp;
    for (std::size_t i = 0; i < rec.times.size(); ++i) {
      const std::size_t k = rec.step_index[i];
      const QuadratureStats a = squeezed_quadratures(tr.gamma[k], tr.alpha[k]);
      const QuadratureStats n = quadrature_stats(rec.states[i]);
      cmp.max_dx = std::max(cmp.max_dx, std::abs(a.dx - n.dx));
      cmp.max_dy = std::max(cmp.max_dy, std::abs(a.dy - n.dy));
      cmp.max_mean_x = std::max(cmp.max_mean_x, std::abs(a.mean_x - n.mean_x));
      cmp.max_mean_y = std::max(cmp.max_mean_y, std::abs(a.mean_y - n.mean_y));
    }
    res.comparison = cmp;
  }
  return res;
}

/// Worker count: hardware concurrency, capped by BELAVKIN_THREADS when it
/// holds a positive integer.
inline std::size_t worker_limit() {
  std::size_t n = hardware_workers();
  if (const char* env = std::getenv("BELAVKIN_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) n = std::min(n, static_cast<std::size_t>(v));
  }
  return n;
}

/// Ensemble averages. Each requested quadrature field is followed by its
/// standard error in a column named <field>_se; weight likewise.
inline RunResult run_ensemble_cmd(const RunConfig& c) {
  EnsembleSpec spec;
  spec.params = c.model_params();
  spec.filter = detail::filter_kind(c.run.filter);
  spec.initial = c.initial_state();
  spec.n_traj = c.run.n_traj;
  spec.base_seed = c.run.seed;
  spec.dt = c.run.dt;
  spec.t_final = c.run.t_final;
  spec.record_every = c.run.record_every;
  spec.scheme = c.run.scheme;
  spec.workers = worker_limit();
  const auto& fields = c.output.fields;
  const bool need_rho = detail::wants(fields, "norm") || detail::wants(fields, "fidelity_to_asymptotic");
  spec.mean_state = need_rho;
  const EnsembleSummary s = run_ensemble(spec);

  RunResult res;
  res.table.columns = {"t"};
  for (const auto& f : fields) {
    res.table.columns.push_back(f);
    if (f == "meanX" || f == "meanY" || f == "dX" || f == "dY" || f == "weight") res.table.columns.push_back(f + "_se");
  }
  for (std::size_t i = 0; i < s.times.size(); ++i) {
    const double t = s.times[i];
    const QuadratureStats& m = s.mean_quadratures[i];
    const QuadratureStats& e = s.quadrature_stderr[i];
    std::vector<double> row{t};
    for (const auto& f : fields) {
      if (f == "meanX") row.insert(row.end(), {m.mean_x, e.mean_x});
      else if (f == "meanY") row.insert(row.end(), {m.mean_y, e.mean_y});
      else if (f == "dX") row.insert(row.end(), {m.dx, e.dx});
      else if (f == "dY") row.insert(row.end(), {m.dy, e.dy});
      else if (f == "weight") row.insert(row.end(), {s.weight_mean[i], s.weight_stderr[i]});
      else if (f == "norm") row.push_back(s.mean_state[i].trace());
      else if (f == "fidelity_to_asymptotic") {
        row.push_back(detail::overlap_with_coherent(s.mean_state[i].matrix(), asymptotic_amplitude(spec.params, t), c.model.dim));
      } else {
        throw DomainError("field " + f + " is not available for ensembles");
      }
    }
    res.table.rows.push_back(std::move(row));
  }
  return res;
}

inline RunResult run_config(const RunConfig& c) { return c.run.n_traj > 1 ? run_ensemble_cmd(c) : run_single(c); }

inline void write_table(const RunConfig& c, const Table& t) {
  write_text(c.output.path, c.output.format == RunConfig::Format::csv ? to_csv(t) : to_json(t));
}

// ---------------------------------------------------------------------------
// Relaxation of the squeezing under a rotating local-oscillator phase.

struct Fig2Options {
  double omega = 1.0;
  double omega0 = 0.05;
  cplx gamma0 = 0.8;
  double tau_final = 100.0;
  double tau_step = 0.01;
  bool overlay = true;  // also run the nonlinear filter
  double overlay_dt = 1e-3;
  std::size_t overlay_dim = 64;
  std::size_t overlay_every = 10;
  std::uint64_t seed = 7;
};

struct Fig2Curve {
  double mu = 0.0;
  std::filesystem::path file;
  std::optional<std::filesystem::path> overlay_file;
  Table table;  // tau, dX, dY
  double crossing_tau = 0.0;
};

/// First τ from which |dX - ½| < band holds for every later sample; +∞ if
/// the last sample is still outside the band.
inline double crossing_time(const std::vector<double>& tau, const std::vector<double>& dx, double band = 0.05) {
  std::size_t k = dx.size();
  while (k > 0 && std::abs(dx[k - 1] - 0.5) < band) --k;
  if (k == dx.size()) return std::numeric_limits<double>::infinity();
  return tau[k];
}

inline std::string mu_label(double mu) {
  std::ostringstream s;
  s << mu;
  return s.str();
}

inline ModelParams fig2_params(double mu, const Fig2Options& o, std::size_t dim) {
  ModelParams p;
  p.omega = o.omega;
  p.mu = mu;
  p.dim = dim;
  p.phase = Phase::sweep(o.omega0);
  return p;
}

/// Closed-form ΔX, ΔY against τ = ωt; they depend on Γ(t) alone, so no noise
/// enters.
inline Table fig2_curve(double mu, const Fig2Options& o = {}) {
  const ModelParams p = fig2_params(mu, o, 2);
  const std::size_t n = grid_steps(o.tau_final, o.tau_step);
  const double dt = o.tau_step / o.omega;
  const std::vector<cplx> g = riccati_track(o.gamma0, p, dt, n);
  Table t;
  t.columns = {"tau", "dX", "dY"};
  for (std::size_t k = 0; k <= n; ++k) {
    const QuadratureStats q = squeezed_quadratures(g[k], 0.0);
    t.rows.push_back({static_cast<double>(k) * o.tau_step, q.dx, q.dy});
  }
  return t;
}

inline Table fig2_overlay(double mu, const Fig2Options& o = {}) {
  const ModelParams p = fig2_params(mu, o, o.overlay_dim);
  const double t_final = o.tau_final / o.omega;
  const WienerPath path = WienerPath::generate(o.seed, o.overlay_dt, grid_steps(t_final, o.overlay_dt));
  IntegrateOptions opt;
  opt.record_every = o.overlay_every;
  const auto init = squeezed_coherent_state(SqueezeParams::from_gamma(o.gamma0, 0.0), o.overlay_dim);
  const TrajectoryRecord rec = integrate(FilterKind::nonlinear, init, p, path, opt);
  Table t;
  t.columns = {"tau", "dX", "dY"};
  for (std::size_t i = 0; i < rec.times.size(); ++i) {
    const QuadratureStats q = quadrature_stats(rec.states[i]);
    t.rows.push_back({o.omega * rec.times[i], q.dx, q.dy});
  }
  return t;
}

/// Writes fig2_mu<μ>.csv (closed form) and, with overlay, fig2_mu<μ>_numeric.csv
/// per μ into out_dir.
inline std::vector<Fig2Curve> run_fig2(const std::vector<double>& mu_values, const std::filesystem::path& out_dir,
                                       const Fig2Options& o = {}) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());
  std::vector<Fig2Curve> out;
  for (const double mu : mu_values) {
    Fig2Curve c;
    c.mu = mu;
    c.table = fig2_curve(mu, o);
    c.crossing_tau = crossing_time(c.table.values("tau"), c.table.values("dX"));
    c.file = out_dir / ("fig2_mu" + mu_label(mu) + ".csv");
    write_text(c.file.string(), to_csv(c.table));
    if (o.overlay) {
      c.overlay_file = out_dir / ("fig2_mu" + mu_label(mu) + "_numeric.csv");
      write_text(c.overlay_file->string(), to_csv(fig2_overlay(mu, o)));
    }
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace belavkin::cli
