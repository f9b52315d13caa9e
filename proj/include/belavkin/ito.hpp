#pragma once

// Quantum Ito multiplication table for n-channel differentials dB_i, dB†_j,
// dΛ_ij and dt, together with the second-order (dM dM') term of the product
// rule. Differentials are labels; coefficients are any type with a product,
// e.g. std::string (products are concatenations) or std::complex<double>.

#include <complex>
#include <string>
#include <type_traits>
#include <vector>

#include "belavkin/error.hpp"

namespace belavkin::ito {

enum class Kind { dB, dBdag, dLambda, dt, zero };

struct Differential {
  Kind kind = Kind::zero;
  int i = 0;  // channel of dB / dB†, or row index of dΛ
  int j = 0;  // column index of dΛ

  static constexpr Differential dB(int ch) { return {Kind::dB, ch, 0}; }
  static constexpr Differential dBdag(int ch) { return {Kind::dBdag, ch, 0}; }
  static constexpr Differential dLambda(int row, int col) { return {Kind::dLambda, row, col}; }
  static constexpr Differential dt() { return {Kind::dt, 0, 0}; }
  static constexpr Differential zero() { return {Kind::zero, 0, 0}; }

  friend constexpr bool operator==(const Differential&, const Differential&) = default;

  std::string str() const {
    switch (kind) {
      case Kind::dB: return "dB" + std::to_string(i);
      case Kind::dBdag: return "dB+" + std::to_string(i);
      case Kind::dLambda: return "dL" + std::to_string(i) + std::to_string(j);
      case Kind::dt: return "dt";
      case Kind::zero: return "0";
    }
    return "?";
  }
};

/// Multiplication table over a fixed number of channels (default 2).
class Table {
 public:
  explicit Table(int channels = 2) : channels_(channels) {
    if (channels < 1) throw DomainError("channel count must be >= 1");
  }

  int channels() const noexcept { return channels_; }

  void validate(const Differential& d) const {
    auto ok = [&](int c) { return c >= 1 && c <= channels_; };
    switch (d.kind) {
      case Kind::dB:
      case Kind::dBdag:
        if (!ok(d.i)) throw DomainError("channel index out of range in " + d.str());
        break;
      case Kind::dLambda:
        if (!ok(d.i) || !ok(d.j)) throw DomainError("channel index out of range in " + d.str());
        break;
      default:
        break;
    }
  }

  /// dx * dy.
  Differential product(const Differential& x, const Differential& y) const {
    validate(x);
    validate(y);
    // dB_i dB†_j = δ_ij dt
    if (x.kind == Kind::dB && y.kind == Kind::dBdag) {
      return x.i == y.i ? Differential::dt() : Differential::zero();
    }
    // dB_i dΛ_kj = δ_ik dB_j
    if (x.kind == Kind::dB && y.kind == Kind::dLambda) {
      return x.i == y.i ? Differential::dB(y.j) : Differential::zero();
    }
    // dΛ_kj dB†_i = δ_ji dB†_k
    if (x.kind == Kind::dLambda && y.kind == Kind::dBdag) {
      return x.j == y.i ? Differential::dBdag(x.i) : Differential::zero();
    }
    // dΛ_ij dΛ_kl = δ_jk dΛ_il
    if (x.kind == Kind::dLambda && y.kind == Kind::dLambda) {
      return x.j == y.i ? Differential::dLambda(x.i, y.j) : Differential::zero();
    }
    return Differential::zero();
  }

 private:
  int channels_;
};

inline Differential product(const Differential& x, const Differential& y, int channels = 2) {
  return Table(channels).product(x, y);
}

/// coefficient x differential
template <class Coeff>
struct Term {
  Coeff coeff;
  Differential diff;
};

template <class Coeff>
using FormalSum = std::vector<Term<Coeff>>;

namespace detail {
template <class Coeff>
Coeff multiply(const Coeff& a, const Coeff& b) {
  if constexpr (std::is_same_v<Coeff, std::string>) {
    return a + b;
  } else {
    return a * b;
  }
}

template <class Coeff>
Coeff add(const Coeff& a, const Coeff& b) {
  if constexpr (std::is_same_v<Coeff, std::string>) {
    return a + " + " + b;
  } else {
    return a + b;
  }
}
}  // namespace detail

/// The dM dM' contribution to d(MM'): all pairwise table contractions, with
/// vanishing products dropped and terms on equal differentials merged (in
/// order of first appearance).
template <class Coeff>
FormalSum<Coeff> second_order_term(const FormalSum<Coeff>& m, const FormalSum<Coeff>& mp,
                                   int channels = 2) {
  const Table table(channels);
  FormalSum<Coeff> out;
  for (const auto& x : m) {
    for (const auto& y : mp) {
      const Differential d = table.product(x.diff, y.diff);
      if (d.kind == Kind::zero) continue;
      Coeff c = detail::multiply(x.coeff, y.coeff);
      bool merged = false;
      for (auto& t : out) {
        if (t.diff == d) {
          t.coeff = detail::add(t.coeff, c);
          merged = true;
          break;
        }
      }
      if (!merged) out.push_back({std::move(c), d});
    }
  }
  return out;
}

}  // namespace belavkin::ito
