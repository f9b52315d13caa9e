#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <utility>
#include <vector>

#include "belavkin/error.hpp"

namespace belavkin {

/// Philox4x32-10 counter-based generator.
struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter apply(Counter ctr, Key key) noexcept {
    constexpr std::uint64_t m0 = 0xD2511F53u;
    constexpr std::uint64_t m1 = 0xCD9E8D57u;
    constexpr std::uint32_t w0 = 0x9E3779B9u;
    constexpr std::uint32_t w1 = 0xBB67AE85u;
    for (int r = 0; r < 10; ++r) {
      if (r > 0) {
        key[0] += w0;
        key[1] += w1;
      }
      const std::uint64_t p0 = m0 * ctr[0];
      const std::uint64_t p1 = m1 * ctr[2];
      ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0],
             static_cast<std::uint32_t>(p1),
             static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1],
             static_cast<std::uint32_t>(p0)};
    }
    return ctr;
  }
};

/// Standard normal variate number `step` of stream (seed, stream).
inline double standard_normal(std::uint64_t seed, std::uint64_t stream, std::uint64_t step) noexcept {
  const auto lo = [](std::uint64_t x) { return static_cast<std::uint32_t>(x); };
  const auto hi = [](std::uint64_t x) { return static_cast<std::uint32_t>(x >> 32); };
  const auto w = Philox4x32::apply({lo(step), hi(step), lo(stream), hi(stream)}, {lo(seed), hi(seed)});
  constexpr double two53 = 0x1p-53;
  const std::uint64_t b1 = ((static_cast<std::uint64_t>(w[0]) << 32) | w[1]) >> 11;
  const std::uint64_t b2 = ((static_cast<std::uint64_t>(w[2]) << 32) | w[3]) >> 11;
  const double u1 = (static_cast<double>(b1) + 1.0) * two53;  // (0, 1]
  const double u2 = static_cast<double>(b2) * two53;          // [0, 1)
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

/// Discretized Brownian increments on the grid t_k = k dt.
class WienerPath {
 public:
  WienerPath() = default;

  /// Increments are N(0, dt), reproducible from (seed, stream, dt, steps).
  static WienerPath generate(std::uint64_t seed, double dt, std::size_t steps, std::uint64_t stream = 0) {
    check_dt(dt);
    WienerPath p;
    p.seed_ = seed;
    p.stream_ = stream;
    p.dt_ = dt;
    p.inc_.resize(steps);
    const double s = std::sqrt(dt);
    for (std::size_t k = 0; k < steps; ++k) p.inc_[k] = s * standard_normal(seed, stream, k);
    return p;
  }

  static WienerPath from_increments(double dt, std::vector<double> increments) {
    check_dt(dt);
    WienerPath p;
    p.dt_ = dt;
    p.inc_ = std::move(increments);
    return p;
  }

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream() const noexcept { return stream_; }
  double dt() const noexcept { return dt_; }
  std::size_t steps() const noexcept { return inc_.size(); }
  double t_final() const noexcept { return dt_ * static_cast<double>(inc_.size()); }
  const std::vector<double>& increments() const noexcept { return inc_; }
  double operator[](std::size_t k) const { return inc_[k]; }

  /// Same Brownian path on a grid `factor` times coarser.
  WienerPath coarsen(std::size_t factor) const {
    if (factor == 0 || inc_.size() % factor != 0) {
      throw GridMismatch("coarsening factor must divide the number of steps");
    }
    WienerPath p;
    p.seed_ = seed_;
    p.stream_ = stream_;
    p.dt_ = dt_ * static_cast<double>(factor);
    p.inc_.assign(inc_.size() / factor, 0.0);
    for (std::size_t k = 0; k < inc_.size(); ++k) p.inc_[k / factor] += inc_[k];
    return p;
  }

 private:
  static void check_dt(double dt) {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw DomainError("dt must be positive");
  }

  std::uint64_t seed_ = 0;
  std::uint64_t stream_ = 0;
  double dt_ = 1.0;
  std::vector<double> inc_;
};

/// Number of grid steps for [0, t_final]; dt must divide t_final.
inline std::size_t grid_steps(double t_final, double dt) {
  if (!(dt > 0.0) || !(t_final >= 0.0)) throw DomainError("need dt > 0 and t_final >= 0");
  const double n = std::round(t_final / dt);
  if (std::abs(n * dt - t_final) > 1e-9 * std::max(1.0, std::abs(t_final))) {
    throw GridMismatch("dt does not divide t_final");
  }
  return static_cast<std::size_t>(n);
}

}  // namespace belavkin
