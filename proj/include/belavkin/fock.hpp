#pragma once

// Truncated Fock-space linear algebra for a single bosonic mode.
//
// Level n of the truncated basis lives at index n, 0 <= n < dim. Ladder
// operators are applied to vectors in O(dim) without forming matrices; dense
// matrices are only built where an exponential is needed.

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <complex>
#include <cstddef>
#include <string>
#include <utility>

#include "belavkin/error.hpp"

namespace belavkin {

using cplx = std::complex<double>;
using Vector = Eigen::VectorXcd;
using Matrix = Eigen::MatrixXcd;

inline constexpr cplx kI{0.0, 1.0};

/// Norm tolerance for states flagged as normalized.
inline constexpr double kNormTolerance = 1e-12;
/// Hermiticity tolerance for density matrices.
inline constexpr double kHermitianTolerance = 1e-12;
inline constexpr double kTraceTolerance = 1e-10;
inline constexpr double kPositivityTolerance = 1e-10;
/// Tail mass above which state construction refuses to truncate.
inline constexpr double kOverflowLeakage = 1e-6;

inline void require_dim(std::size_t dim) {
  if (dim < 2) {
    throw InvalidDimension("Fock truncation must have dim >= 2, got " +
                           std::to_string(dim));
  }
}

// ---------------------------------------------------------------------------
// Ladder operators on raw amplitude vectors.

/// a|v>: (a v)[n] = sqrt(n+1) v[n+1].
inline Vector annihilate(const Vector& v) {
  const Eigen::Index n = v.size();
  Vector out(n);
  for (Eigen::Index k = 0; k + 1 < n; ++k) {
    out[k] = std::sqrt(static_cast<double>(k + 1)) * v[k + 1];
  }
  out[n - 1] = 0.0;
  return out;
}

/// a†|v>: (a† v)[n] = sqrt(n) v[n-1].
inline Vector create(const Vector& v) {
  const Eigen::Index n = v.size();
  Vector out(n);
  out[0] = 0.0;
  for (Eigen::Index k = 1; k < n; ++k) {
    out[k] = std::sqrt(static_cast<double>(k)) * v[k - 1];
  }
  return out;
}

// ---------------------------------------------------------------------------
// QuantumState

enum class Normalization { normalized, unnormalized };

/// Amplitude vector over the truncated Fock basis. Immutable after
/// construction. A state flagged `normalized` has unit norm within 1e-12.
class QuantumState {
 public:
  QuantumState(Vector amps, Normalization flag)
      : amps_(std::move(amps)), flag_(flag) {
    require_dim(static_cast<std::size_t>(amps_.size()));
    if (flag_ == Normalization::normalized) {
      const double n2 = amps_.squaredNorm();
      if (!(std::abs(n2 - 1.0) <= kNormTolerance)) {
        throw NormalizationError("state flagged normalized has squared norm " +
                                 std::to_string(n2));
      }
    }
  }

  static QuantumState unnormalized(Vector amps) {
    return QuantumState(std::move(amps), Normalization::unnormalized);
  }

  /// Rescales to unit norm; throws on a zero or non-finite vector.
  static QuantumState normalize(Vector amps) {
    const double n = amps.norm();
    if (!(n > 0.0) || !std::isfinite(n)) {
      throw NormalizationError("cannot normalize a zero or non-finite state");
    }
    amps /= n;
    return QuantumState(std::move(amps), Normalization::normalized);
  }

  static QuantumState fock(std::size_t level, std::size_t dim) {
    require_dim(dim);
    if (level >= dim) {
      throw InvalidDimension("Fock level " + std::to_string(level) +
                             " outside truncation " + std::to_string(dim));
    }
    Vector v = Vector::Zero(static_cast<Eigen::Index>(dim));
    v[static_cast<Eigen::Index>(level)] = 1.0;
    return QuantumState(std::move(v), Normalization::normalized);
  }

  static QuantumState vacuum(std::size_t dim) { return fock(0, dim); }

  std::size_t dim() const noexcept { return static_cast<std::size_t>(amps_.size()); }
  const Vector& amps() const noexcept { return amps_; }
  bool is_normalized() const noexcept { return flag_ == Normalization::normalized; }
  double norm() const { return amps_.norm(); }

  QuantumState normalized() const { return normalize(amps_); }

  /// Relative population of the highest retained level, |amps[N-1]|^2/||amps||^2.
  double leakage() const {
    const double n2 = amps_.squaredNorm();
    return n2 > 0.0 ? std::norm(amps_[amps_.size() - 1]) / n2 : 0.0;
  }

 private:
  Vector amps_;
  Normalization flag_;
};

// ---------------------------------------------------------------------------
// Operator

/// Dense dim x dim operator on the truncated basis.
class Operator {
 public:
  explicit Operator(Matrix m) : m_(std::move(m)) {
    if (m_.rows() != m_.cols()) {
      throw InvalidDimension("operator matrix must be square");
    }
    require_dim(static_cast<std::size_t>(m_.rows()));
  }

  std::size_t dim() const noexcept { return static_cast<std::size_t>(m_.rows()); }
  const Matrix& matrix() const noexcept { return m_; }
  cplx operator()(Eigen::Index r, Eigen::Index c) const { return m_(r, c); }

  Operator adjoint() const { return Operator(m_.adjoint()); }

  static Operator identity(std::size_t dim) {
    require_dim(dim);
    const auto n = static_cast<Eigen::Index>(dim);
    return Operator(Matrix::Identity(n, n));
  }

 private:
  Matrix m_;
};

inline Operator operator*(const Operator& x, const Operator& y) {
  if (x.dim() != y.dim()) throw DimensionMismatch("operator product dimension mismatch");
  return Operator(x.matrix() * y.matrix());
}

inline Operator operator+(const Operator& x, const Operator& y) {
  if (x.dim() != y.dim()) throw DimensionMismatch("operator sum dimension mismatch");
  return Operator(x.matrix() + y.matrix());
}

inline Operator operator-(const Operator& x, const Operator& y) {
  if (x.dim() != y.dim()) throw DimensionMismatch("operator difference dimension mismatch");
  return Operator(x.matrix() - y.matrix());
}

inline Operator operator*(cplx c, const Operator& x) { return Operator(c * x.matrix()); }

/// Applying an operator never preserves the normalization flag.
inline QuantumState operator*(const Operator& op, const QuantumState& s) {
  if (op.dim() != s.dim()) throw DimensionMismatch("operator/state dimension mismatch");
  return QuantumState::unnormalized(op.matrix() * s.amps());
}

inline Operator make_annihilation(std::size_t dim) {
  require_dim(dim);
  const auto n = static_cast<Eigen::Index>(dim);
  Matrix m = Matrix::Zero(n, n);
  for (Eigen::Index k = 1; k < n; ++k) m(k - 1, k) = std::sqrt(static_cast<double>(k));
  return Operator(std::move(m));
}

inline Operator make_creation(std::size_t dim) { return make_annihilation(dim).adjoint(); }

/// [a, a†] in the truncated basis from the integer squares of the ladder entries.
/// Floating-point products of the square roots are off by an ulp; these entries are exact.
inline Operator ladder_commutator(std::size_t dim) {
  require_dim(dim);
  const auto n = static_cast<Eigen::Index>(dim);
  Matrix m = Matrix::Zero(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const double up = k + 1 < n ? static_cast<double>(k + 1) : 0.0;
    m(k, k) = up - static_cast<double>(k);
  }
  return Operator(std::move(m));
}

inline Operator make_number(std::size_t dim) {
  require_dim(dim);
  const auto n = static_cast<Eigen::Index>(dim);
  Matrix m = Matrix::Zero(n, n);
  for (Eigen::Index k = 0; k < n; ++k) m(k, k) = static_cast<double>(k);
  return Operator(std::move(m));
}

/// Projector onto the lowest `levels` Fock levels; defaults to dim/2.
inline Matrix interior_projector(std::size_t dim, std::size_t levels = 0) {
  require_dim(dim);
  if (levels == 0) levels = dim / 2;
  if (levels > dim) levels = dim;
  const auto n = static_cast<Eigen::Index>(dim);
  Matrix p = Matrix::Zero(n, n);
  for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(levels); ++k) p(k, k) = 1.0;
  return p;
}

// ---------------------------------------------------------------------------
// Coherent and squeezed states

/// Poisson(|alpha|^2) mass on levels >= dim.
inline double coherent_tail_mass(cplx alpha, std::size_t dim) {
  const double mean = std::norm(alpha);
  if (mean == 0.0) return 0.0;
  // log P(n) = -mean + n log(mean) - lgamma(n+1)
  double tail = 0.0;
  for (std::size_t n = dim;; ++n) {
    const double nn = static_cast<double>(n);
    const double p = std::exp(-mean + nn * std::log(mean) - std::lgamma(nn + 1.0));
    tail += p;
    if (nn > mean && p < 1e-300 + 1e-18 * tail) break;
    if (n > dim + 100000) break;
  }
  return tail;
}

/// Mass of the squeezed vacuum S(xi)|0> on levels >= dim. Depends on |xi| only.
inline double squeezed_vacuum_tail_mass(cplx xi, std::size_t dim) {
  const double r = std::abs(xi);
  if (r == 0.0) return 0.0;
  const double t2 = std::tanh(r) * std::tanh(r);
  // P(2m) = t^{2m} (2m)! / (4^m (m!)^2) / cosh r
  double tail = 0.0;
  for (std::size_t m = (dim + 1) / 2;; ++m) {
    const double mm = static_cast<double>(m);
    const double logp = mm * std::log(t2) + std::lgamma(2 * mm + 1) -
                        mm * std::log(4.0) - 2 * std::lgamma(mm + 1) -
                        std::log(std::cosh(r));
    const double p = std::exp(logp);
    tail += p;
    if (p < 1e-300 + 1e-18 * tail) break;
    if (m > dim + 1000000) break;
  }
  return tail;
}

/// |alpha> = e^{-|alpha|^2/2} sum alpha^n/sqrt(n!) |n>, renormalized over the
/// truncated basis. Throws TruncationOverflow when the discarded Poisson tail
/// exceeds 1e-6.
inline QuantumState coherent_state(cplx alpha, std::size_t dim) {
  require_dim(dim);
  const double tail = coherent_tail_mass(alpha, dim);
  if (tail > kOverflowLeakage) {
    throw TruncationOverflow("coherent state |alpha|^2=" + std::to_string(std::norm(alpha)) +
                                 " does not fit in dim=" + std::to_string(dim),
                             tail);
  }
  const auto n = static_cast<Eigen::Index>(dim);
  Vector v(n);
  v[0] = std::exp(-0.5 * std::norm(alpha));
  for (Eigen::Index k = 1; k < n; ++k) {
    v[k] = v[k - 1] * alpha / std::sqrt(static_cast<double>(k));
  }
  return QuantumState::normalize(std::move(v));
}

/// D(alpha) = exp(alpha a† - conj(alpha) a).
inline Operator displacement(cplx alpha, std::size_t dim) {
  require_dim(dim);
  const Matrix a = make_annihilation(dim).matrix();
  const Matrix gen = alpha * a.adjoint() - std::conj(alpha) * a;
  return Operator(gen.exp());
}

/// S(xi) = exp(conj(xi) a^2 / 2 - xi (a†)^2 / 2), exponentiated in a basis of
/// `embed_dim` levels and cut back to `dim` (embed_dim == dim gives an exactly
/// unitary truncated operator). Throws TruncationOverflow if the squeezed
/// vacuum places more than 1e-6 of its mass above level dim-1.
inline Operator squeeze(cplx xi, std::size_t dim, std::size_t embed_dim = 0) {
  require_dim(dim);
  if (embed_dim < dim) embed_dim = dim;
  const double tail = squeezed_vacuum_tail_mass(xi, dim);
  if (tail > kOverflowLeakage) {
    throw TruncationOverflow("squeeze factor " + std::to_string(std::abs(xi)) +
                                 " does not fit in dim=" + std::to_string(dim),
                             tail);
  }
  const Matrix a = make_annihilation(embed_dim).matrix();
  const Matrix gen = 0.5 * std::conj(xi) * a * a - 0.5 * xi * a.adjoint() * a.adjoint();
  const Matrix s = gen.exp();
  const auto n = static_cast<Eigen::Index>(dim);
  return Operator(s.topLeftCorner(n, n));
}

/// Squeezing parameters of S(xi)D(alpha)|0>, xi = rho e^{i theta}.
struct SqueezeParams {
  cplx xi{0.0, 0.0};
  cplx alpha{0.0, 0.0};

  double squeeze_factor() const { return std::abs(xi); }
  double squeeze_angle() const { return std::arg(xi); }
  /// cosh rho
  double gamma1() const { return std::cosh(std::abs(xi)); }
  /// e^{i theta} sinh rho
  cplx gamma2() const { return std::polar(std::sinh(std::abs(xi)), std::arg(xi)); }
  /// gamma2 / gamma1 = e^{i theta} tanh rho
  cplx gamma() const { return std::polar(std::tanh(std::abs(xi)), std::arg(xi)); }

  /// Inverse map from the squeezing ratio: rho = atanh|gamma|, theta = arg gamma.
  static SqueezeParams from_gamma(cplx gamma, cplx alpha) {
    const double g = std::abs(gamma);
    if (!(g < 1.0)) {
      throw DomainError("squeezing ratio must satisfy |gamma| < 1, got " + std::to_string(g));
    }
    return SqueezeParams{std::polar(std::atanh(g), std::arg(gamma)), alpha};
  }
};

/// |xi, alpha> = S(xi) D(alpha) |0>. Built in a basis four times larger and
/// cut back, so that amplitudes away from the truncation edge are accurate.
inline QuantumState squeezed_coherent_state(const SqueezeParams& p, std::size_t dim) {
  require_dim(dim);
  const std::size_t big = 4 * dim;
  const QuantumState coh = coherent_state(p.alpha, big);
  if (p.xi == cplx{0.0, 0.0}) {
    return QuantumState::normalize(coh.amps().head(static_cast<Eigen::Index>(dim)));
  }
  const Operator s = squeeze(p.xi, big);
  const Vector full = s.matrix() * coh.amps();
  const auto n = static_cast<Eigen::Index>(dim);
  const double tail = full.tail(full.size() - n).squaredNorm();
  if (tail > kOverflowLeakage) {
    throw TruncationOverflow("squeezed coherent state does not fit in dim=" +
                                 std::to_string(dim),
                             tail);
  }
  return QuantumState::normalize(full.head(n));
}

// ---------------------------------------------------------------------------
// Expectations

/// <s|a|s> for a normalized state.
inline cplx expect_a(const Vector& v) { return v.dot(annihilate(v)); }

struct QuadratureStats {
  double mean_x = 0.0;
  double mean_y = 0.0;
  double dx = 0.0;
  double dy = 0.0;
};

namespace detail {
inline QuadratureStats quadrature_stats_raw(const Vector& v) {
  const Vector av = annihilate(v);
  const Vector cv = create(v);
  const Vector x = 0.5 * (av + cv);
  const Vector y = (av - cv) / (2.0 * kI);
  QuadratureStats st;
  st.mean_x = v.dot(x).real();
  st.mean_y = v.dot(y).real();
  st.dx = std::sqrt(std::max(0.0, x.squaredNorm() - st.mean_x * st.mean_x));
  st.dy = std::sqrt(std::max(0.0, y.squaredNorm() - st.mean_y * st.mean_y));
  return st;
}
}  // namespace detail

/// Means and standard deviations of X = (a+a†)/2 and Y = (a-a†)/2i.
inline QuadratureStats quadrature_stats(const QuantumState& s) {
  if (!s.is_normalized()) {
    throw NormalizationError("quadrature_stats needs a normalized state");
  }
  return detail::quadrature_stats_raw(s.amps());
}

/// |<s1|s2>|^2.
inline double fidelity(const QuantumState& s1, const QuantumState& s2) {
  if (s1.dim() != s2.dim()) throw DimensionMismatch("fidelity: dimension mismatch");
  if (!s1.is_normalized() || !s2.is_normalized()) {
    throw NormalizationError("fidelity needs normalized states");
  }
  return std::min(1.0, std::norm(s1.amps().dot(s2.amps())));
}

// ---------------------------------------------------------------------------
// DensityMatrix

/// Sum of absolute eigenvalues of a Hermitian matrix.
inline double trace_norm(const Matrix& h) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (h + h.adjoint()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().sum();
}

/// Normalized, Hermitian, positive semidefinite matrix on the truncated basis.
class DensityMatrix {
 public:
  /// Validates Hermiticity (1e-12), unit trace (1e-10) and positivity
  /// (smallest eigenvalue >= -1e-10).
  explicit DensityMatrix(Matrix m) : m_(std::move(m)) {
    if (m_.rows() != m_.cols()) throw InvalidDimension("density matrix must be square");
    require_dim(static_cast<std::size_t>(m_.rows()));
    const double herm = (m_ - m_.adjoint()).cwiseAbs().maxCoeff();
    if (!(herm <= kHermitianTolerance)) {
      throw DomainError("density matrix not Hermitian (deviation " + std::to_string(herm) + ")");
    }
    const double tr = m_.trace().real();
    if (!(std::abs(tr - 1.0) <= kTraceTolerance)) {
      throw NormalizationError("density matrix trace " + std::to_string(tr));
    }
    const double lmin = min_eigenvalue();
    if (!(lmin >= -kPositivityTolerance)) {
      throw DomainError("density matrix not positive (min eigenvalue " + std::to_string(lmin) + ")");
    }
  }

  struct Trusted {};
  /// Skips validation; for matrices produced by the library's own steppers.
  DensityMatrix(Matrix m, Trusted) : m_(std::move(m)) {}

  static DensityMatrix from_state(const QuantumState& s) {
    if (!s.is_normalized()) throw NormalizationError("projector needs a normalized state");
    return DensityMatrix(s.amps() * s.amps().adjoint(), Trusted{});
  }

  std::size_t dim() const noexcept { return static_cast<std::size_t>(m_.rows()); }
  const Matrix& matrix() const noexcept { return m_; }
  cplx operator()(Eigen::Index r, Eigen::Index c) const { return m_(r, c); }

  double trace() const { return m_.trace().real(); }
  double purity() const { return (m_ * m_).trace().real(); }
  double min_eigenvalue() const {
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m_ + m_.adjoint()), Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
  }
  cplx expect_a() const {
    // Tr(rho a) = sum_n sqrt(n) rho[n, n-1]
    cplx acc = 0.0;
    for (Eigen::Index n = 1; n < m_.rows(); ++n) {
      acc += std::sqrt(static_cast<double>(n)) * m_(n, n - 1);
    }
    return acc;
  }

  /// ||this - other||_1 (sum of absolute eigenvalues of the difference).
  double trace_distance(const DensityMatrix& other) const {
    if (dim() != other.dim()) throw DimensionMismatch("trace distance: dimension mismatch");
    return trace_norm(m_ - other.m_);
  }

 private:
  Matrix m_;
};

/// Quadrature moments Tr(rho X), Tr(rho X^2), ... for a density matrix.
inline QuadratureStats quadrature_stats(const DensityMatrix& rho) {
  const Matrix a = make_annihilation(rho.dim()).matrix();
  const Matrix x = 0.5 * (a + a.adjoint());
  const Matrix y = (a - a.adjoint()) / (2.0 * kI);
  QuadratureStats st;
  st.mean_x = (rho.matrix() * x).trace().real();
  st.mean_y = (rho.matrix() * y).trace().real();
  st.dx = std::sqrt(std::max(0.0, (rho.matrix() * x * x).trace().real() - st.mean_x * st.mean_x));
  st.dy = std::sqrt(std::max(0.0, (rho.matrix() * y * y).trace().real() - st.mean_y * st.mean_y));
  return st;
}

}  // namespace belavkin
