#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <stdexcept>
#include <string>

namespace latflow {

using Int = boost::multiprecision::cpp_int;
using Rat = boost::multiprecision::cpp_rational;

struct bad_input : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline double to_double(const Rat& q) { return q.convert_to<double>(); }

/// Parses "p/q", "-3", or a plain decimal like "0.25" into an exact rational.
inline Rat parse_rational(const std::string& s) {
  if (s.empty()) throw bad_input("empty rational literal");
  auto slash = s.find('/');
  try {
    if (slash != std::string::npos) {
      Int num(s.substr(0, slash));
      Int den(s.substr(slash + 1));
      if (den == 0) throw bad_input("zero denominator in '" + s + "'");
      return Rat(num, den);
    }
    auto dot = s.find('.');
    if (dot == std::string::npos) return Rat(Int(s));
    std::string head = s.substr(0, dot), tail = s.substr(dot + 1);
    if (tail.find_first_not_of("0123456789") != std::string::npos)
      throw bad_input("bad decimal '" + s + "'");
    bool neg = !head.empty() && head[0] == '-';
    if (head == "-" || head.empty()) head = neg ? "-0" : "0";
    Int scale = 1;
    for (size_t i = 0; i < tail.size(); ++i) scale *= 10;
    Int whole(head);
    Int frac = tail.empty() ? Int(0) : Int(tail);
    Rat r = Rat(whole) + (neg ? -Rat(frac, scale) : Rat(frac, scale));
    return r;
  } catch (const bad_input&) {
    throw;
  } catch (const std::exception&) {
    throw bad_input("cannot parse rational '" + s + "'");
  }
}

/// "p/q" with q > 1, otherwise just "p".
inline std::string rat_to_string(const Rat& q) {
  Int num = numerator(q), den = denominator(q);
  if (den == 1) return num.str();
  return num.str() + "/" + den.str();
}

/// Floor of sqrt for non-negative integers.
inline Int isqrt_floor(const Int& n) {
  if (n < 0) throw std::invalid_argument("isqrt of negative");
  return boost::multiprecision::sqrt(n);
}

/// True iff q is the square of a rational; if so *root is the non-negative root.
inline bool rational_square_root(const Rat& q, Rat* root) {
  if (q < 0) return false;
  Int n = numerator(q), d = denominator(q);
  Int sn = isqrt_floor(n), sd = isqrt_floor(d);
  if (sn * sn != n || sd * sd != d) return false;
  if (root) *root = Rat(sn, sd);
  return true;
}

}  // namespace latflow
