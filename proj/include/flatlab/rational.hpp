#pragma once

#include <gmpxx.h>

#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <ostream>
#include <string>

#include "flatlab/errors.hpp"

namespace flatlab {

/**
 * Arbitrary-precision rational number, always stored in lowest terms with a
 * positive denominator.  Thin wrapper over GMP's mpq_class that adds checked
 * construction, parsing, and the exact predicates the geometry kernel needs.
 */
class Rational {
 public:
  Rational() : v_(0) {}
  Rational(long n) : v_(n) {}                 // NOLINT: implicit by design
  Rational(long n, long d) {
    require(d != 0, "DivisionByZero", "rational with zero denominator");
    v_ = mpq_class(n, d);
    v_.canonicalize();
  }
  explicit Rational(const mpz_class& n) : v_(n) {}
  Rational(const mpz_class& n, const mpz_class& d) {
    require(d != 0, "DivisionByZero", "rational with zero denominator");
    v_ = mpq_class(n, d);
    v_.canonicalize();
  }
  explicit Rational(const mpq_class& q) : v_(q) { v_.canonicalize(); }

  // Parses "p", "-p/q" or "p/q" (whitespace-free).
  static Rational parse(const std::string& s) {
    auto slash = s.find('/');
    try {
      if (slash == std::string::npos) return Rational(mpz_class(s));
      mpz_class num(s.substr(0, slash));
      mpz_class den(s.substr(slash + 1));
      require(den != 0, "DivisionByZero", "rational with zero denominator");
      return Rational(num, den);
    } catch (const std::invalid_argument&) {
      fail("ParseError", "malformed rational literal '" + s + "'");
    }
  }

  const mpz_class num() const { return v_.get_num(); }
  const mpz_class den() const { return v_.get_den(); }
  const mpq_class& raw() const { return v_; }

  int sign() const { return sgn(v_); }
  bool is_zero() const { return sgn(v_) == 0; }
  bool is_integer() const { return v_.get_den() == 1; }

  Rational abs() const { return sign() < 0 ? Rational(mpq_class(-v_)) : *this; }

  double to_double() const { return v_.get_d(); }

  // 80-bit evaluation used by the floating cross-checks: converting numerator
  // and denominator limb-by-limb keeps the full extended-precision mantissa,
  // which mpq_get_d (53-bit) would truncate.
  long double to_long_double() const {
    return mpz_to_long_double(v_.get_num()) / mpz_to_long_double(v_.get_den());
  }

  friend Rational operator+(const Rational& x, const Rational& y) { return Rational(mpq_class(x.v_ + y.v_)); }
  friend Rational operator-(const Rational& x, const Rational& y) { return Rational(mpq_class(x.v_ - y.v_)); }
  friend Rational operator*(const Rational& x, const Rational& y) { return Rational(mpq_class(x.v_ * y.v_)); }
  friend Rational operator/(const Rational& x, const Rational& y) {
    require(!y.is_zero(), "DivisionByZero", "rational division by zero");
    return Rational(mpq_class(x.v_ / y.v_));
  }
  Rational operator-() const { return Rational(mpq_class(-v_)); }

  Rational& operator+=(const Rational& y) { v_ += y.v_; return *this; }
  Rational& operator-=(const Rational& y) { v_ -= y.v_; return *this; }
  Rational& operator*=(const Rational& y) { v_ *= y.v_; return *this; }
  Rational& operator/=(const Rational& y) { *this = *this / y; return *this; }

  friend bool operator==(const Rational& x, const Rational& y) { return x.v_ == y.v_; }
  friend bool operator!=(const Rational& x, const Rational& y) { return x.v_ != y.v_; }
  friend bool operator<(const Rational& x, const Rational& y) { return x.v_ < y.v_; }
  friend bool operator<=(const Rational& x, const Rational& y) { return x.v_ <= y.v_; }
  friend bool operator>(const Rational& x, const Rational& y) { return x.v_ > y.v_; }
  friend bool operator>=(const Rational& x, const Rational& y) { return x.v_ >= y.v_; }

  std::string str() const {
    if (is_integer()) return v_.get_num().get_str();
    return v_.get_num().get_str() + "/" + v_.get_den().get_str();
  }

  friend std::ostream& operator<<(std::ostream& os, const Rational& q) { return os << q.str(); }

  static long double mpz_to_long_double(const mpz_class& z) {
    const mpz_srcptr p = z.get_mpz_t();
    long double acc = 0.0L;
    size_t n = mpz_size(p);
    for (size_t i = n; i-- > 0;) {
      acc = acc * 18446744073709551616.0L /* 2^64 */ + (long double)mpz_getlimbn(p, i);
    }
    return mpz_sgn(p) < 0 ? -acc : acc;
  }

 private:
  mpq_class v_;
};

inline Rational gcd(const Rational& a, const Rational& b) {
  // gcd over Q: the positive generator of the Z-module aZ + bZ.
  mpz_class den = a.den() * b.den();
  mpz_class g = ::gcd(mpz_class(a.num() * b.den()), mpz_class(b.num() * a.den()));
  return Rational(g, den);
}

}  // namespace flatlab
