#pragma once

#include <gmpxx.h>

#include <stdexcept>
#include <string>

namespace fv {

using Rational = mpq_class;

// Accepts "p/q", "p" or a plain decimal integer; result is canonicalized.
inline Rational parse_rational(const std::string& text) {
  Rational r;
  if (r.set_str(text, 10) != 0) throw std::invalid_argument("bad rational: " + text);
  if (r.get_den() == 0) throw std::invalid_argument("zero denominator: " + text);
  r.canonicalize();
  return r;
}

inline std::string to_string(const Rational& r) { return r.get_str(); }

inline Rational dyadic(long p, int q) {
  Rational r(p);
  r /= Rational(mpz_class(1) << q);
  return r;
}

inline Rational monus(const Rational& x, const Rational& y) {
  if (x >= y) return x - y;
  return Rational(0);
}

inline bool in_unit_interval(const Rational& r) { return r >= 0 && r <= 1; }

}  // namespace fv
