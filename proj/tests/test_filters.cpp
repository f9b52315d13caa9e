#include <cmath>
#include <string>

#include <gtest/gtest.h>

#include "belavkin/analytic.hpp"
#include "belavkin/filters.hpp"
#include "belavkin/fock.hpp"

using namespace belavkin;

namespace {

ModelParams params(double omega, double mu, std::size_t dim, cplx f = 0.0, double phi = 0.0) {
  ModelParams p;
  p.omega = omega;
  p.mu = mu;
  p.dim = dim;
  p.drive = Drive::constant(f);
  p.phase = Phase::constant(phi);
  return p;
}

StepOptions scheme(Scheme s) {
  StepOptions o;
  o.scheme = s;
  return o;
}

QuantumState normalized_of(const QuantumState& s) { return s.normalized(); }

}  // namespace

// ---------------------------------------------------------------------------
// Linear filter

TEST(StepLinear, EulerMaruyamaUpdateFormula) {
  const ModelParams p = params(1.3, 0.2, 12, cplx{0.4, -0.1}, 0.6);
  const QuantumState psi = QuantumState::normalize(Vector::Random(12));
  const double t = 0.37, dw = 0.021, dt = 1e-3;
  const QuantumState out = step_linear(psi, t, dw, p, dt, scheme(Scheme::euler_maruyama));

  const Matrix a = make_annihilation(12).matrix();
  const Matrix ad = a.adjoint();
  const Matrix n = ad * a;
  const Matrix I = Matrix::Identity(12, 12);
  const cplx f = p.drive(t);
  const Matrix K = kI * 1.3 * (n + 0.5 * I) + 0.1 * n;
  const Matrix gen = K + std::sqrt(0.2) * (ad * f - a * std::conj(f));
  const Vector expected = psi.amps() - gen * psi.amps() * dt + std::sqrt(0.2) * std::polar(1.0, -0.6) * a * psi.amps() * dw;
  EXPECT_LT((out.amps() - expected).norm(), 1e-14);
}

TEST(StepLinear, FreeEvolutionPhases) {
  const double omega = 1.0, dt = 1e-3;
  const std::size_t steps = 1000;
  const ModelParams p = params(omega, 0.0, 8);
  const QuantumState psi0 = QuantumState::normalize(Vector::Ones(8));
  for (const Scheme s : {Scheme::exponential_milstein, Scheme::euler_maruyama}) {
    QuantumState psi = psi0;
    for (std::size_t k = 0; k < steps; ++k) psi = step_linear(psi, k * dt, 0.37, p, dt, scheme(s));
    const double t = steps * dt;
    const double tol = s == Scheme::euler_maruyama ? 0.1 : 1e-12;
    for (Eigen::Index n = 0; n < 8; ++n) {
      const cplx want = psi0.amps()[n] * std::exp(-kI * omega * (n + 0.5) * t);
      EXPECT_LT(std::abs(psi.amps()[n] - want), tol * std::abs(want)) << "level " << n;
    }
  }
}

TEST(StepLinear, FreeEvolutionConvergesAsDtShrinks) {
  const ModelParams p = params(1.0, 0.0, 4);
  const QuantumState psi0 = QuantumState::fock(3, 4);
  double prev = INFINITY;
  for (double dt : {1e-2, 1e-3, 1e-4}) {
    QuantumState psi = psi0;
    const std::size_t steps = grid_steps(1.0, dt);
    for (std::size_t k = 0; k < steps; ++k) psi = step_linear(psi, k * dt, 0.0, p, dt, scheme(Scheme::euler_maruyama));
    const double err = std::abs(psi.amps()[3] - std::exp(-kI * 3.5));
    EXPECT_LT(err, prev);
    prev = err;
  }
  EXPECT_LT(prev, 1e-3);
}

TEST(StepLinear, VacuumIsDark) {
  const ModelParams p = params(1.0, 0.3, 16);
  const WienerPath path = WienerPath::generate(3, 1e-3, 2000);
  IntegrateOptions opt;
  opt.step.scheme = Scheme::euler_maruyama;
  const auto rec = integrate(FilterKind::linear, QuantumState::vacuum(16), p, path);
  for (std::size_t i = 0; i < rec.states.size(); ++i) {
    EXPECT_NEAR(rec.states[i].norm(), 1.0, 1e-12);
    EXPECT_NEAR(std::abs(rec.states[i].amps()[0]), 1.0, 1e-12);
  }
  // The explicit step multiplies by 1 - iω dt/2, whose modulus exceeds 1 by
  // O(dt²); the excited levels stay exactly empty.
  const auto em = integrate(FilterKind::linear, QuantumState::vacuum(16), p, path, opt);
  for (std::size_t i = 0; i < em.states.size(); ++i) {
    EXPECT_EQ(em.states[i].amps().tail(15).norm(), 0.0);
    EXPECT_NEAR(em.states[i].norm(), 1.0, 3e-4);
  }
}

TEST(StepLinear, CoherentStateStaysCoherent) {
  const ModelParams p = params(1.0, 0.1, 32);
  for (const Scheme s : {Scheme::euler_maruyama, Scheme::exponential_milstein}) {
    const WienerPath path = WienerPath::generate(17, 1e-4, 10000);
    IntegrateOptions opt;
    opt.step.scheme = s;
    opt.record_every = 10000;
    const auto rec = integrate(FilterKind::linear, coherent_state(1.0, 32), p, path, opt);
    const cplx alpha_t = std::exp(-cplx{0.05, 1.0} * 1.0);
    EXPECT_GE(fidelity(normalized_of(rec.states.back()), coherent_state(alpha_t, 32)), 1.0 - 1e-4);
  }
}

TEST(StepLinear, Linearity) {
  const ModelParams p = params(0.8, 0.25, 16, cplx{0.2, 0.1}, 1.1);
  const QuantumState a = coherent_state(cplx{0.3, 0.5}, 16);
  const QuantumState b = QuantumState::fock(2, 16);
  const cplx c1{0.6, -0.2}, c2{-0.3, 0.9};
  const QuantumState mix = QuantumState::unnormalized(c1 * a.amps() + c2 * b.amps());
  for (const Scheme s : {Scheme::euler_maruyama, Scheme::exponential_euler, Scheme::exponential_milstein}) {
    const auto o = scheme(s);
    const Vector lhs = step_linear(mix, 0.2, 0.013, p, 1e-3, o).amps();
    const Vector rhs = c1 * step_linear(a, 0.2, 0.013, p, 1e-3, o).amps() + c2 * step_linear(b, 0.2, 0.013, p, 1e-3, o).amps();
    EXPECT_LT((lhs - rhs).norm(), 1e-14);
  }
}

TEST(StepLinear, NonFiniteIsBlowup) {
  const ModelParams p = params(1.0, 0.1, 4);
  Vector v = Vector::Zero(4);
  v[1] = NAN;
  EXPECT_THROW(step_linear(QuantumState::unnormalized(v), 0.0, 0.0, p, 1e-3), NumericalBlowup);
}

TEST(StepLinear, DimensionChecked) {
  EXPECT_THROW(step_linear(QuantumState::vacuum(4), 0.0, 0.0, params(1.0, 0.1, 5), 1e-3), DimensionMismatch);
}

// ---------------------------------------------------------------------------
// Nonlinear filter

TEST(StepNonlinear, NoCouplingIsSchrodinger) {
  const ModelParams p = params(1.0, 0.0, 10);
  QuantumState phi = QuantumState::normalize(Vector::Random(10));
  const QuantumState phi0 = phi;
  for (int k = 0; k < 500; ++k) {
    phi = step_nonlinear(phi, k * 1e-3, 0.05, p, 1e-3);
    EXPECT_NEAR(phi.norm(), 1.0, 1e-12);
  }
  for (Eigen::Index n = 0; n < 10; ++n) {
    EXPECT_LT(std::abs(phi.amps()[n] - phi0.amps()[n] * std::exp(-kI * (n + 0.5) * 0.5)), 1e-12);
  }
}

TEST(StepNonlinear, CoherentStateStaysCoherent) {
  const ModelParams p = params(1.0, 0.1, 32);
  const WienerPath path = WienerPath::generate(23, 1e-4, 10000);
  IntegrateOptions opt;
  opt.record_every = 1000;
  const auto rec = integrate(FilterKind::nonlinear, coherent_state(1.0, 32), p, path, opt);
  for (std::size_t i = 0; i < rec.states.size(); ++i) {
    const cplx alpha_t = coherent_amplitude(1.0, p, rec.times[i]);
    EXPECT_GE(fidelity(rec.states[i], coherent_state(alpha_t, 32)), 1.0 - 1e-4) << "t=" << rec.times[i];
  }
}

TEST(StepNonlinear, SqueezedUncertaintiesFollowClosedForm) {
  ModelParams p = params(1.0, 0.04, 64);
  p.phase = Phase::sweep(0.05);
  const WienerPath path = WienerPath::generate(31, 1e-4, 100000);
  IntegrateOptions opt;
  opt.record_every = 100;
  const auto init = squeezed_coherent_state(SqueezeParams::from_gamma(0.8, 1.0), 64);
  const auto rec = integrate(FilterKind::nonlinear, init, p, path, opt);
  const auto tr = squeeze_track(0.8, 1.0, p, WienerPath::from_increments(1e-4, rec.dw));
  double worst = 0.0;
  for (std::size_t i = 0; i < rec.states.size(); ++i) {
    const auto q = quadrature_stats(rec.states[i]);
    const auto a = squeezed_quadratures(tr.gamma[rec.step_index[i]], tr.alpha[rec.step_index[i]]);
    worst = std::max({worst, std::abs(q.dx - a.dx), std::abs(q.dy - a.dy)});
  }
  EXPECT_LT(worst, 2e-3);
}

TEST(StepNonlinear, RequiresNormalizedInput) {
  Vector v = Vector::Zero(4);
  v[0] = 2.0;
  EXPECT_THROW(step_nonlinear(QuantumState::unnormalized(v), 0.0, 0.0, params(1.0, 0.1, 4), 1e-3), NormalizationError);
}

TEST(StepNonlinear, LargeDriftIsStepSizeError) {
  const ModelParams p = params(1.0, 4.0, 32);
  const QuantumState fock4 = QuantumState::fock(4, 32);
  StepOptions em;
  em.scheme = Scheme::euler_maruyama;
  EXPECT_THROW(step_nonlinear(fock4, 0.0, 0.5, p, 0.1), StepSizeError);
  EXPECT_THROW(step_nonlinear(fock4, 0.0, 0.5, p, 0.1, em), StepSizeError);
  // A coherent state is an eigenvector of the diffusion, so its norm barely moves.
  EXPECT_NO_THROW(step_nonlinear(coherent_state(1.5, 32), 0.0, 0.5, p, 1e-3));
}

// The one-step norm change has zero-mean O(dt) noise; its mean is O(dt^{3/2})
// or smaller, and its spread scales like dt. Both step sizes cover the same
// time window so that the state statistics match.
TEST(StepNonlinear, PreRenormalizationDrift) {
  const ModelParams p = params(1.0, 0.2, 32, cplx{0.3, 0.0}, 0.4);
  const QuantumState init = squeezed_coherent_state(SqueezeParams::from_gamma(0.5, 0.7), 32);
  double scaled_mean[2], rms[2];
  const double dts[2] = {1e-3, 1e-4};
  for (int j = 0; j < 2; ++j) {
    const double dt = dts[j];
    const detail::Stepper s(p, dt, Scheme::euler_maruyama);
    const auto n = static_cast<std::size_t>(std::llround(2.0 / dt));
    const WienerPath path = WienerPath::generate(77, dt, n);
    Vector v = init.amps();
    double sum = 0.0, sum2 = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      double drift = 0.0;
      s.nonlinear(v, k * dt, path[k], NoiseMeasure::reference, 1.0, &drift);
      sum += drift;
      sum2 += drift * drift;
    }
    scaled_mean[j] = std::abs(sum / n) / std::pow(dt, 1.5);
    rms[j] = std::sqrt(sum2 / n);
  }
  EXPECT_LT(scaled_mean[1], 3.0 * scaled_mean[0] + 1.0);
  EXPECT_LT(scaled_mean[0], 10.0);
  EXPECT_NEAR(rms[0] / rms[1], 10.0, 3.0);
}

// ---------------------------------------------------------------------------
// Density filter

TEST(StepDensity, ProjectorFollowsNonlinearFilter) {
  const ModelParams p = params(1.0, 0.2, 24, cplx{0.2, 0.1}, 0.3);
  const WienerPath path = WienerPath::generate(5, 1e-4, 10000);
  QuantumState phi = coherent_state(cplx{0.6, -0.4}, 24);
  phi = QuantumState::normalize(phi.amps() + 0.3 * QuantumState::fock(2, 24).amps());
  DensityMatrix rho = DensityMatrix::from_state(phi);
  for (std::size_t k = 0; k < path.steps(); ++k) {
    const double t = k * path.dt();
    phi = step_nonlinear(phi, t, path[k], p, path.dt());
    rho = step_density(rho, t, path[k], p, path.dt());
  }
  EXPECT_LT(rho.trace_distance(DensityMatrix::from_state(phi)), 1e-3);
}

TEST(StepDensity, UnitaryKeepsPurity) {
  const ModelParams p = params(1.0, 0.0, 8);
  Matrix m = Matrix::Zero(8, 8);
  m(0, 0) = 0.5;
  m(1, 1) = 0.3;
  m(3, 3) = 0.2;
  m(0, 1) = m(1, 0) = 0.1;
  DensityMatrix rho{m};
  const double p0 = rho.purity();
  for (int k = 0; k < 1000; ++k) {
    rho = step_density(rho, k * 1e-3, 0.03, p, 1e-3);
    EXPECT_NEAR(rho.purity(), p0, 1e-9);
  }
}

TEST(StepDensity, VacuumIsStationary) {
  const ModelParams p = params(1.0, 0.5, 12);
  const WienerPath path = WienerPath::generate(8, 1e-3, 1000);
  const auto rec = integrate(DensityMatrix::from_state(QuantumState::vacuum(12)), p, path);
  const Matrix vac = DensityMatrix::from_state(QuantumState::vacuum(12)).matrix();
  for (const auto& r : rec.densities) EXPECT_LT((r.matrix() - vac).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(StepDensity, PositivityLossIsStepSizeError) {
  const ModelParams p = params(1.0, 9.0, 16);
  EXPECT_THROW(step_density(DensityMatrix::from_state(coherent_state(1.5, 16)), 0.0, 1.5, p, 0.2,
                            scheme(Scheme::euler_maruyama)),
               StepSizeError);
}

TEST(StepDensity, PurityRetained) {
  const ModelParams p = params(1.0, 0.2, 20, cplx{0.3, 0.0}, 0.0);
  const WienerPath path = WienerPath::generate(4, 1e-4, 100000);
  IntegrateOptions opt;
  opt.record_every = 1000;
  const auto rec = integrate(FilterKind::density, coherent_state(cplx{0.5, 0.5}, 20), p, path, opt);
  for (const auto& r : rec.densities) EXPECT_GE(r.purity(), 1.0 - 5e-3);
}

// ---------------------------------------------------------------------------
// Trajectories

TEST(Integrate, ZeroStepsKeepsInitialState) {
  const auto rec = integrate(FilterKind::nonlinear, coherent_state(0.5, 8), params(1.0, 0.1, 8),
                             WienerPath::generate(1, 1e-3, 0));
  ASSERT_EQ(rec.states.size(), 1u);
  EXPECT_EQ(rec.times[0], 0.0);
  EXPECT_TRUE(rec.record_q.empty());
}

TEST(Integrate, RecordEqualsIncrementsWithoutDrive) {
  for (const FilterKind kind : {FilterKind::linear, FilterKind::nonlinear, FilterKind::density}) {
    const auto rec = integrate(kind, coherent_state(0.5, 12), params(1.0, 0.3, 12), WienerPath::generate(2, 1e-3, 500));
    for (std::size_t k = 0; k < rec.dw.size(); ++k) EXPECT_EQ(rec.record_q[k], rec.dw[k]);
  }
}

TEST(Integrate, RecordOffsetWithDrive) {
  const ModelParams p = params(1.0, 0.3, 12, cplx{0.5, 0.2}, 0.8);
  const auto rec = integrate(FilterKind::linear, coherent_state(0.5, 12), p, WienerPath::generate(2, 1e-3, 100));
  for (std::size_t k = 0; k < rec.dw.size(); ++k) {
    EXPECT_NEAR(rec.record_q[k], rec.dw[k] + p.record_offset(k * 1e-3) * 1e-3, 1e-16);
  }
}

TEST(Integrate, Deterministic) {
  const ModelParams p = params(1.0, 0.3, 16, cplx{0.1, 0.0}, 0.2);
  const auto path = WienerPath::generate(99, 1e-3, 300);
  const auto a = integrate(FilterKind::nonlinear, coherent_state(0.4, 16), p, path);
  const auto b = integrate(FilterKind::nonlinear, coherent_state(0.4, 16), p, path);
  ASSERT_EQ(a.states.size(), b.states.size());
  for (std::size_t i = 0; i < a.states.size(); ++i) EXPECT_TRUE(a.states[i].amps() == b.states[i].amps());
  EXPECT_EQ(a.record_q, b.record_q);
  EXPECT_EQ(a.times, b.times);
}

TEST(Integrate, RecordInvariants) {
  const ModelParams p = params(1.0, 0.3, 16, cplx{0.2, 0.0}, 0.0);
  const auto path = WienerPath::generate(12, 1e-3, 1000);
  const auto lin = integrate(FilterKind::linear, coherent_state(0.4, 16), p, path);
  const auto non = integrate(FilterKind::nonlinear, coherent_state(0.4, 16), p, path);
  for (std::size_t i = 1; i < lin.times.size(); ++i) EXPECT_NEAR(lin.times[i] - lin.times[i - 1], 1e-3, 1e-15);
  for (double w : lin.weights) EXPECT_GT(w, 0.0);
  for (const auto& s : non.states) EXPECT_NEAR(s.norm(), 1.0, 1e-9);
}

TEST(Integrate, FailureCarriesStepAndTime) {
  const ModelParams p = params(1.0, 4.0, 32);
  const auto path = WienerPath::generate(1, 0.1, 50);
  try {
    integrate(FilterKind::nonlinear, coherent_state(1.5, 32), p, path);
    FAIL() << "expected a step-size failure";
  } catch (const StepSizeError& e) {
    EXPECT_NE(e.step(), NumericalFailure::npos);
    EXPECT_NE(std::string(e.what()).find("at step"), std::string::npos);
  }
}

TEST(Integrate, DimensionChecked) {
  EXPECT_THROW(integrate(FilterKind::linear, QuantumState::vacuum(4), params(1.0, 0.1, 5), WienerPath::generate(1, 1e-3, 1)),
               DimensionMismatch);
}

// ---------------------------------------------------------------------------
// Replay

TEST(Replay, LinearReplayMatchesNonlinearStates) {
  const ModelParams p = params(1.0, 0.2, 32, cplx{0.3, -0.1}, 0.5);
  const auto path = WienerPath::generate(44, 1e-4, 10000);
  IntegrateOptions opt;
  opt.record_every = 100;
  const QuantumState init = coherent_state(cplx{0.8, 0.3}, 32);
  const auto non = integrate(FilterKind::nonlinear, init, p, path, opt);
  const auto lin = replay_linear_from_record(init, p, non);
  ASSERT_EQ(lin.states.size(), non.states.size());
  for (std::size_t i = 0; i < non.states.size(); ++i) {
    EXPECT_GE(fidelity(lin.states[i].normalized(), non.states[i]), 1.0 - 1e-3) << "t=" << non.times[i];
  }
}

TEST(Replay, ExactWithoutCoupling) {
  const ModelParams p = params(1.3, 0.0, 12);
  const auto path = WienerPath::generate(4, 1e-3, 500);
  const QuantumState init = QuantumState::normalize(Vector::Random(12));
  const auto non = integrate(FilterKind::nonlinear, init, p, path);
  const auto lin = replay_linear_from_record(init, p, non);
  for (std::size_t i = 0; i < non.states.size(); ++i) {
    EXPECT_LT((lin.states[i].amps() - non.states[i].amps()).norm(), 1e-12);
  }
}

TEST(Replay, WeightsMatchClosedForm) {
  ModelParams p = params(1.0, 0.04, 64);
  p.phase = Phase::sweep(0.05);
  const auto path = WienerPath::generate(8, 1e-4, 50000);
  IntegrateOptions opt;
  opt.record_every = 500;
  const QuantumState init = squeezed_coherent_state(SqueezeParams::from_gamma(0.8, 1.0), 64);
  const auto non = integrate(FilterKind::nonlinear, init, p, path, opt);
  const auto lin = replay_linear_from_record(init, p, non);
  const auto tr = squeeze_track(0.8, 1.0, p, WienerPath::from_increments(1e-4, lin.dw));
  for (std::size_t i = 0; i < lin.states.size(); ++i) {
    const double w = tr.weight[lin.step_index[i]];
    EXPECT_LT(std::abs(lin.weights[i] - w), 2e-3 * w) << "t=" << lin.times[i];
  }
}

TEST(Replay, ParamsMismatchDetected) {
  const ModelParams p = params(1.0, 0.2, 12);
  const auto rec = integrate(FilterKind::nonlinear, coherent_state(0.3, 12), p, WienerPath::generate(1, 1e-3, 10));
  ModelParams q = p;
  q.mu = 0.3;
  EXPECT_THROW(replay_linear_from_record(coherent_state(0.3, 12), q, rec), ParamsMismatch);
  q = p;
  q.drive = Drive::constant(0.1);
  EXPECT_THROW(replay_linear_from_record(coherent_state(0.3, 12), q, rec), ParamsMismatch);
}
