#pragma once

#include "latflow/rational.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

namespace latflow {

/// Exact non-negative combination  sum_i c_i * sqrt(r_i)  with c_i, r_i rational.
///
/// Radicands are kept in a canonical form: two radicands whose ratio is a
/// rational square share one representative, so equality is a structural check
/// and strict comparisons terminate by refining interval bounds (square roots
/// of pairwise non-commensurable rationals are linearly independent over Q).
class SqrtSum {
 public:
  SqrtSum() = default;

  /// Adds c * sqrt(rad); rad >= 0, c may be any rational.
  void add_sqrt(const Rat& rad, const Rat& coeff = Rat(1)) {
    if (rad < 0) throw std::invalid_argument("negative radicand");
    if (rad == 0 || coeff == 0) return;
    for (auto& [rep, c] : terms_) {
      Rat ratio = rad / rep, root;
      if (rational_square_root(ratio, &root)) {
        c += coeff * root;
        if (c == 0) terms_.erase(rep);
        return;
      }
    }
    terms_[rad] = coeff;
  }

  void add(const SqrtSum& o) {
    for (const auto& [rad, c] : o.terms_) add_sqrt(rad, c);
  }

  void scale(const Rat& s) {
    if (s == 0) {
      terms_.clear();
      return;
    }
    for (auto& [rad, c] : terms_) c *= s;
  }

  bool is_zero() const { return terms_.empty(); }

  /// Exact three-way comparison with another sum: -1, 0, +1.
  int compare(const SqrtSum& o) const {
    SqrtSum diff = *this;
    for (const auto& [rad, c] : o.terms_) diff.add_sqrt(rad, -c);
    if (diff.terms_.empty()) return 0;
    return diff.sign_of_nonzero();
  }

  int compare(const Rat& q) const {
    SqrtSum other;
    other.add_sqrt(Rat(1), q);
    return compare(other);
  }

  double to_double() const {
    double v = 0;
    for (const auto& [rad, c] : terms_) v += latflow::to_double(c) * std::sqrt(latflow::to_double(rad));
    return v;
  }

 private:
  // Sign of a provably nonzero sum, by interval refinement.
  int sign_of_nonzero() const {
    for (unsigned bits = 32; bits <= 4096; bits *= 2) {
      Int scale = Int(1) << bits;
      Rat lo(0), hi(0);
      for (const auto& [rad, c] : terms_) {
        // sqrt(p/q) = sqrt(p*q)/q; bracket sqrt(p*q) at 2^-bits resolution.
        Int p = numerator(rad), q = denominator(rad);
        Int m = isqrt_floor(p * q * scale * scale);
        Rat root_lo(m, q * scale), root_hi(m + 1, q * scale);
        if (c >= 0) {
          lo += c * root_lo;
          hi += c * root_hi;
        } else {
          lo += c * root_hi;
          hi += c * root_lo;
        }
      }
      if (lo > 0) return 1;
      if (hi < 0) return -1;
    }
    throw std::runtime_error("sqrt-sum comparison did not resolve");
  }

  std::map<Rat, Rat> terms_;
};

}  // namespace latflow
