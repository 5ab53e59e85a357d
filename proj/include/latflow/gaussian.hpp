#pragma once

#include "latflow/rational.hpp"

#include <complex>

namespace latflow {

/// Complex number with exact rational real and imaginary parts.
struct GaussRat {
  Rat re, im;

  GaussRat() : re(0), im(0) {}
  GaussRat(Rat r, Rat i) : re(std::move(r)), im(std::move(i)) {}

  GaussRat operator+(const GaussRat& o) const { return {re + o.re, im + o.im}; }
  GaussRat operator-(const GaussRat& o) const { return {re - o.re, im - o.im}; }
  GaussRat operator*(const GaussRat& o) const {
    return {re * o.re - im * o.im, re * o.im + im * o.re};
  }
  GaussRat operator*(const Rat& s) const { return {re * s, im * s}; }
  GaussRat& operator+=(const GaussRat& o) {
    re += o.re;
    im += o.im;
    return *this;
  }
  GaussRat conj() const { return {re, -im}; }
  bool operator==(const GaussRat& o) const { return re == o.re && im == o.im; }
  bool is_zero() const { return re == 0 && im == 0; }

  Rat norm2() const { return re * re + im * im; }
  std::complex<double> to_complex() const { return {to_double(re), to_double(im)}; }
};

/// |a||b| sin(arg b - arg a); the sign orders phases inside any half-plane.
inline Rat phase_cross(const GaussRat& a, const GaussRat& b) {
  return a.re * b.im - a.im * b.re;
}

/// arg(a) < arg(b), valid when both lie in a common half-open length-pi cone.
inline bool phase_less(const GaussRat& a, const GaussRat& b) {
  return phase_cross(a, b) > 0;
}

inline bool phase_equal(const GaussRat& a, const GaussRat& b) {
  return phase_cross(a, b) == 0;
}

/// Membership in the default half-plane H = {arg in (-pi/2, pi/2]}.
inline bool in_default_halfplane(const GaussRat& z) {
  return z.re > 0 || (z.re == 0 && z.im > 0);
}

}  // namespace latflow
