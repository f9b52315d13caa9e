#include <cmath>
#include <complex>

#include <gtest/gtest.h>

#include "belavkin/analytic.hpp"
#include "belavkin/fock.hpp"

using namespace belavkin;

namespace {

ModelParams params(double omega, double mu, cplx f = 0.0) {
  ModelParams p;
  p.omega = omega;
  p.mu = mu;
  p.drive = Drive::constant(f);
  return p;
}

ModelParams sweep(double omega, double mu, double omega0) {
  ModelParams p = params(omega, mu);
  p.phase = Phase::sweep(omega0);
  return p;
}

// Same drive, but opaque, so only the quadrature route can evaluate it.
ModelParams opaque_drive(ModelParams p, cplx f) {
  p.drive = Drive::function([f](double) { return f; });
  return p;
}

}  // namespace

TEST(CoherentAmplitude, InitialValue) {
  EXPECT_EQ(coherent_amplitude(cplx{0.3, 0.2}, params(1.0, 0.1, 0.4), 0.0), cplx(0.3, 0.2));
}

TEST(CoherentAmplitude, UndrivenDecay) {
  const ModelParams p = params(1.0, 0.1);
  const cplx a0{1.0, -0.5};
  for (double t : {0.5, 3.0, 20.0}) {
    EXPECT_LT(std::abs(coherent_amplitude(a0, p, t) - a0 * std::exp(-cplx{0.05, 1.0} * t)), 1e-15);
  }
}

TEST(CoherentAmplitude, ConstantDriveLimit) {
  const double mu = 0.04;
  const cplx f0{0.3, -0.2};
  const ModelParams p = params(1.0, mu, f0);
  const cplx limit = -std::sqrt(mu) * f0 / cplx{mu / 2, 1.0};
  const double t = 50.0 / mu;
  EXPECT_LT(std::abs(coherent_amplitude(0.7, p, t) - limit), 1e-10);
  const cplx quad = coherent_amplitude(0.7, opaque_drive(p, f0), t);
  EXPECT_LT(std::abs(quad - coherent_amplitude(0.7, p, t)), 1e-9);
}

TEST(CoherentAmplitude, TimeDependentDriveByQuadrature) {
  ModelParams p = params(1.0, 0.2);
  p.drive = Drive::function([](double s) { return cplx{std::cos(0.5 * s), 0.0}; });
  // -√μ ∫₀ᵗ e^{-k(t-s)} cos(s/2) ds in closed form
  const cplx k{0.1, 1.0};
  const double t = 3.0;
  auto prim = [&](double s) {
    const cplx w1{0.0, 0.5}, w2{0.0, -0.5};
    return 0.5 * (std::exp(k * s + w1 * s) / (k + w1) + std::exp(k * s + w2 * s) / (k + w2));
  };
  const cplx expected = -std::sqrt(0.2) * std::exp(-k * t) * (prim(t) - prim(0.0));
  EXPECT_LT(std::abs(asymptotic_amplitude(p, t) - expected), 1e-10);
}

TEST(CoherentAmplitude, NegativeTimeRejected) {
  EXPECT_THROW(coherent_amplitude(0.0, params(1.0, 0.1), -1.0), DomainError);
}

TEST(AsymptoticAmplitude, Basics) {
  EXPECT_EQ(asymptotic_amplitude(params(1.0, 0.1), 7.0), cplx(0.0));
  const cplx f0{0.3, 0.0};
  const ModelParams p = params(1.0, 0.2, f0);
  const cplx limit = -std::sqrt(0.2) * f0 / cplx{0.1, 1.0};
  EXPECT_LT(std::abs(asymptotic_amplitude(p, 400.0) - limit), 1e-12);
  EXPECT_LT(std::abs(asymptotic_amplitude(opaque_drive(p, f0), 400.0) - limit), 1e-9);
  const cplx a0{0.5, 0.5};
  for (double t : {1.0, 10.0}) {
    const cplx diff = coherent_amplitude(a0, p, t) - asymptotic_amplitude(p, t);
    EXPECT_LT(std::abs(diff - a0 * std::exp(-cplx{0.1, 1.0} * t)), 1e-14);
    EXPECT_NEAR(std::abs(diff), std::abs(a0) * std::exp(-0.1 * t), 1e-14);
  }
}

TEST(Riccati, ZeroStaysZero) {
  const ModelParams p = sweep(1.0, 0.04, 0.05);
  for (double t : {0.0, 1.0, 50.0}) EXPECT_EQ(riccati_gamma(0.0, p, t), cplx(0.0));
}

TEST(Riccati, NoCouplingIsRotation) {
  const ModelParams p = sweep(1.3, 0.0, 0.05);
  const cplx g0{0.5, 0.3};
  for (double t : {0.7, 5.0}) {
    const cplx g = riccati_gamma(g0, p, t);
    EXPECT_LT(std::abs(g - g0 * std::exp(-2.0 * kI * 1.3 * t)), 1e-14);
    EXPECT_NEAR(std::abs(g), std::abs(g0), 1e-14);
  }
}

TEST(Riccati, RelaxedAtTauHundred) {
  const ModelParams p = sweep(1.0, 0.04, 0.05);
  const cplx g = riccati_gamma(0.8, p, 100.0);
  EXPECT_LT(std::abs(g), 0.03);
  EXPECT_LT(std::abs(riccati_rk4(0.8, p, 100.0, 100000) - g), 1e-6);
}

TEST(Riccati, RoutesAgree) {
  for (double g0 : {0.2, 0.5, 0.8}) {
    for (double mu : {0.01, 0.04, 0.08}) {
      for (double w0 : {0.0, 0.05, 0.2}) {
        const ModelParams p = sweep(1.0, mu, w0);
        for (double t : {0.5, 10.0, 100.0}) {
          const cplx a = riccati_gamma(g0, p, t, RiccatiRoute::closed_form);
          const cplx b = riccati_gamma(g0, p, t, RiccatiRoute::quadrature);
          EXPECT_LT(std::abs(a - b), 1e-9) << g0 << " " << mu << " " << w0 << " " << t;
        }
      }
    }
  }
}

TEST(Riccati, ConstantPhaseAgreesWithRk4) {
  ModelParams p = params(1.0, 0.3);
  p.phase = Phase::constant(0.4);
  const cplx g = riccati_gamma(cplx{0.5, -0.2}, p, 8.0);
  EXPECT_LT(std::abs(riccati_rk4(cplx{0.5, -0.2}, p, 8.0, 20000) - g), 1e-8);
  const auto track = riccati_track(cplx{0.5, -0.2}, p, 0.01, 800);
  EXPECT_LT(std::abs(track.back() - g), 1e-9);
}

TEST(Riccati, DomainChecked) {
  EXPECT_THROW(riccati_gamma(1.0, sweep(1.0, 0.04, 0.05), 1.0), DomainError);
  EXPECT_THROW(riccati_gamma(0.5, params(1.0, 0.04), 1.0, RiccatiRoute::closed_form), DomainError);
}

TEST(Riccati, DecayEnvelopeOnSweepGrid) {
  for (double mu : {0.01, 0.04, 0.08}) {
    const ModelParams p = sweep(1.0, mu, 0.05);
    const auto g = riccati_track(0.8, p, 0.1, 1000);
    double c = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) c = std::max(c, std::abs(g[k]) / (0.8 * std::exp(-mu * 0.1 * k)));
    EXPECT_LE(c, 2.0) << "mu=" << mu;
  }
}

TEST(Riccati, UncertaintiesSettleAfterTenOverMu) {
  for (double mu : {0.01, 0.04, 0.08}) {
    const ModelParams p = sweep(1.0, mu, 0.05);
    for (double t = 10.0 / mu; t <= 20.0 / mu; t += 1.0) {
      const QuadratureStats q = squeezed_quadratures(riccati_gamma(0.8, p, t), 0.0);
      EXPECT_LT(std::abs(q.dx - 0.5), 1e-3) << "mu=" << mu << " t=" << t;
      EXPECT_LT(std::abs(q.dy - 0.5), 1e-3) << "mu=" << mu << " t=" << t;
    }
  }
}

TEST(Ansatz, UnsqueezedBranch) {
  const ModelParams p = sweep(1.0, 0.2, 0.05);
  AnsatzState s{1.0, 0.0, cplx{0.4, 0.1}};
  for (int k = 0; k < 1000; ++k) {
    s = ansatz_ode_step(s, k * 1e-3, 0.01, p, 1e-3);
    EXPECT_EQ(s.gamma2, cplx(0.0));
    EXPECT_NEAR(std::abs(s.gamma1 - 1.0), 0.0, 1e-14);
  }
}

TEST(Ansatz, HyperbolicNormPreservedPerStep) {
  const ModelParams p = sweep(1.0, 0.04, 0.05);
  const SqueezeParams sp = SqueezeParams::from_gamma(0.8, 1.0);
  AnsatzState s{sp.gamma1(), sp.gamma2(), 1.0};
  const double dt = 1e-3;
  for (int k = 0; k < 2000; ++k) {
    const double before = std::norm(s.gamma1) - std::norm(s.gamma2);
    s = ansatz_ode_step(s, k * dt, 0.0, p, dt);
    const double after = std::norm(s.gamma1) - std::norm(s.gamma2);
    EXPECT_LT(std::abs(after - before), 10.0 * dt * dt) << "step " << k;
  }
}

TEST(Ansatz, RatioMatchesClosedForm) {
  const ModelParams p = sweep(0.25, 0.04, 0.05);
  const SqueezeParams sp = SqueezeParams::from_gamma(0.8, 1.0);
  AnsatzState s{sp.gamma1(), sp.gamma2(), 1.0};
  const double dt = 1e-5;
  const std::size_t n = grid_steps(5.0, dt);
  double worst = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    s = ansatz_ode_step(s, k * dt, 0.0, p, dt);
    if ((k + 1) % 1000 == 0) worst = std::max(worst, std::abs(s.gamma2 / s.gamma1 - riccati_gamma(0.8, p, (k + 1) * dt)));
  }
  EXPECT_LT(worst, 1e-5);
}

TEST(SqueezedAmplitude, UnsqueezedIsNoiseFree) {
  const ModelParams p = sweep(1.0, 0.1, 0.05);
  const auto path = WienerPath::generate(3, 1e-3, 2000);
  const std::vector<cplx> gamma(2001, 0.0);
  const auto alpha = squeezed_amplitude(gamma, cplx{1.0, 0.2}, p, path);
  for (std::size_t k = 0; k < alpha.size(); k += 100) {
    EXPECT_LT(std::abs(alpha[k] - cplx{1.0, 0.2} * std::exp(-cplx{0.05, 1.0} * (k * 1e-3))), 1e-12);
  }
}

TEST(SqueezedAmplitude, NoCouplingRotates) {
  const ModelParams p = sweep(1.0, 0.0, 0.05);
  const auto path = WienerPath::generate(3, 1e-3, 2000);
  const auto gamma = riccati_track(cplx{0.6, 0.2}, p, 1e-3, 2000);
  const auto alpha = squeezed_amplitude(gamma, cplx{0.5, -0.5}, p, path);
  for (std::size_t k = 0; k < alpha.size(); k += 100) {
    EXPECT_LT(std::abs(alpha[k] - cplx{0.5, -0.5} * std::exp(-kI * (k * 1e-3))), 1e-12);
  }
}

TEST(SqueezedAmplitude, MatchesAnsatzSystem) {
  const ModelParams p = sweep(1.0, 0.04, 0.05);
  const double dt = 1e-4;
  const std::size_t n = 100000;
  const auto path = WienerPath::generate(12, dt, n);
  const auto gamma = riccati_track(0.8, p, dt, n);
  const auto alpha = squeezed_amplitude(gamma, 1.0, p, path);
  const SqueezeParams sp = SqueezeParams::from_gamma(0.8, 1.0);
  AnsatzState s{sp.gamma1(), sp.gamma2(), 1.0};
  for (std::size_t k = 0; k < n; ++k) s = ansatz_ode_step(s, k * dt, path[k], p, dt);
  EXPECT_LT(std::abs(s.alpha - alpha.back()), 1e-3);
}

TEST(SqueezedAmplitude, GridMismatchDetected) {
  const ModelParams p = sweep(1.0, 0.04, 0.05);
  const auto path = WienerPath::generate(1, 1e-3, 100);
  EXPECT_THROW(squeezed_amplitude(std::vector<cplx>(50, 0.0), 1.0, p, path), GridMismatch);
}

TEST(QuadratureTrack, Values) {
  const QuadratureStats z = squeezed_quadratures(0.0, 0.0);
  EXPECT_DOUBLE_EQ(z.dx, 0.5);
  EXPECT_DOUBLE_EQ(z.dy, 0.5);
  const QuadratureStats s = squeezed_quadratures(0.8, 1.0);
  EXPECT_NEAR(s.dx, 1.0 / 6.0, 1e-15);
  EXPECT_NEAR(s.dy, 1.5, 1e-14);
  const QuadratureStats f = quadrature_stats(squeezed_coherent_state(SqueezeParams::from_gamma(0.8, 1.0), 128));
  EXPECT_NEAR(f.dx, s.dx, 1e-6);
  EXPECT_NEAR(f.dy, s.dy, 1e-6);
  EXPECT_NEAR(f.mean_x, s.mean_x, 1e-6);
  EXPECT_NEAR(f.mean_y, s.mean_y, 1e-6);
  EXPECT_THROW(squeezed_quadratures(1.0, 0.0), DomainError);
}

TEST(QuadratureTrack, MeansMatchStateVector) {
  const cplx g{0.3, -0.4}, a{0.7, 0.2};
  const QuadratureStats s = squeezed_quadratures(g, a);
  const QuadratureStats f = quadrature_stats(squeezed_coherent_state(SqueezeParams::from_gamma(g, a), 48));
  EXPECT_NEAR(f.mean_x, s.mean_x, 1e-8);
  EXPECT_NEAR(f.mean_y, s.mean_y, 1e-8);
  EXPECT_NEAR(f.dx, s.dx, 1e-8);
  EXPECT_NEAR(f.dy, s.dy, 1e-8);
}

TEST(QuadratureTrack, UncertaintyProduct) {
  for (double r = 0.0; r < 0.95; r += 0.1) {
    for (double th = -3.0; th < 3.0; th += 0.5) {
      const cplx g = std::polar(r, th);
      const QuadratureStats q = squeezed_quadratures(g, 0.0);
      const cplx kappa = (1.0 + g) / (1.0 - g);
      EXPECT_NEAR(q.dx * q.dy, std::abs(kappa) / (4.0 * kappa.real()), 1e-12);
      EXPECT_GE(q.dx * q.dy, 0.25 - 1e-15);
    }
  }
  EXPECT_NEAR(squeezed_quadratures(0.6, 0.0).dx * squeezed_quadratures(0.6, 0.0).dy, 0.25, 1e-15);
  EXPECT_GT(squeezed_quadratures(cplx{0.0, 0.6}, 0.0).dx * squeezed_quadratures(cplx{0.0, 0.6}, 0.0).dy, 0.26);
}

TEST(SqueezeTrack, Invariants) {
  const ModelParams p = sweep(1.0, 0.08, 0.05);
  const auto tr = squeeze_track(0.8, cplx{1.0, 0.5}, p, WienerPath::generate(6, 1e-3, 20000));
  for (std::size_t k = 0; k < tr.gamma.size(); ++k) {
    ASSERT_LT(std::abs(tr.gamma[k]), 1.0);
    ASSERT_GT(tr.kappa[k].real(), 0.0);
    ASSERT_GT(tr.weight[k], 0.0);
    ASSERT_NEAR(std::norm(tr.gamma1[k]) - std::norm(tr.gamma2[k]), 1.0, 1e-12);
  }
  const auto q = quadrature_track(tr);
  EXPECT_EQ(q.size(), tr.gamma.size());
}

TEST(SqueezeTrack, UncertaintiesIgnoreNoise) {
  const ModelParams p = sweep(1.0, 0.04, 0.05);
  const auto a = quadrature_track(squeeze_track(0.8, 1.0, p, WienerPath::generate(1, 1e-3, 5000)));
  const auto b = quadrature_track(squeeze_track(0.8, 1.0, p, WienerPath::generate(2, 1e-3, 5000)));
  for (std::size_t k = 0; k < a.size(); ++k) {
    ASSERT_EQ(a[k].dx, b[k].dx);
    ASSERT_EQ(a[k].dy, b[k].dy);
  }
}

TEST(WeightTrack, VacuumTrajectoryHasUnitWeight) {
  const ModelParams p = sweep(1.0, 0.2, 0.05);
  const auto tr = squeeze_track(0.0, 0.0, p, WienerPath::generate(5, 1e-3, 3000));
  for (double w : tr.weight) EXPECT_EQ(w, 1.0);
}

TEST(WeightTrack, MartingaleMean) {
  const ModelParams p = sweep(1.0, 0.04, 0.05);
  const std::size_t n = 1024;
  double sum = 0.0, sum2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto tr = squeeze_track(0.8, 1.0, p, WienerPath::generate(2024, 1e-2, 1000, i));
    sum += tr.weight.back();
    sum2 += tr.weight.back() * tr.weight.back();
  }
  const double mean = sum / n;
  EXPECT_LT(std::abs(mean - 1.0), 3.0 / std::sqrt(static_cast<double>(n)));
}

TEST(CoherentOverlap, MatchesStateVector) {
  const cplx g{0.4, 0.3}, a{0.5, -0.2}, beta{0.1, 0.6};
  const QuantumState s = squeezed_coherent_state(SqueezeParams::from_gamma(g, a), 48);
  const double direct = std::norm(coherent_state(beta, 48).amps().dot(s.amps()));
  EXPECT_NEAR(coherent_overlap(g, a, beta), direct, 1e-9);
}
