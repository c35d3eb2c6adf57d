#pragma once

#include <cmath>
#include <ostream>
#include <string>

#include "flatlab/errors.hpp"
#include "flatlab/rational.hpp"

namespace flatlab {

inline bool is_squarefree(long d) {
  if (d < 1) return false;
  for (long p = 2; p * p <= d; ++p) {
    if (d % (p * p) == 0) return false;
  }
  return true;
}

/**
 * Element of a real quadratic field: a + b*sqrt(d) with rational a, b and a
 * squarefree integer d >= 2.  Pure rationals are stored with b = 0 and the
 * sentinel d = 0, which is compatible with every ambient field; arithmetic
 * that mixes two distinct nonzero d values throws MixedField.
 *
 * All predicates (sign, comparison) are exact: the sign of a + b*sqrt(d) is
 * decided by comparing a^2 against b^2 d, never by floating evaluation.
 */
class QuadNum {
 public:
  QuadNum() : a_(0), b_(0), d_(0) {}
  QuadNum(long n) : a_(n), b_(0), d_(0) {}  // NOLINT: implicit by design
  QuadNum(const Rational& a) : a_(a), b_(0), d_(0) {}  // NOLINT
  QuadNum(Rational a, Rational b, long d) : a_(std::move(a)), b_(std::move(b)), d_(d) {
    if (b_.is_zero()) {
      d_ = 0;
    } else {
      require(d_ >= 2 && is_squarefree(d_), "ParseError",
              "field discriminant must be a squarefree integer >= 2, got " + std::to_string(d));
    }
  }

  static QuadNum sqrt_of(long d) { return QuadNum(Rational(0), Rational(1), d); }

  const Rational& a() const { return a_; }
  const Rational& b() const { return b_; }
  long d() const { return d_; }

  bool is_rational() const { return d_ == 0; }
  bool is_zero() const { return a_.is_zero() && b_.is_zero(); }

  // Galois conjugate: a - b*sqrt(d).
  QuadNum conj() const { return QuadNum(a_, -b_, d_ == 0 ? 2 : d_); }

  // Field norm x * conj(x) = a^2 - b^2 d; multiplicative, rational-valued.
  Rational norm() const { return a_ * a_ - b_ * b_ * Rational(d_); }

  // Exact sign.  For a, b of opposite (nonzero) signs, sign(a + b sqrt(d)) is
  // settled by the squared comparison a^2 <=> b^2 d, which cannot tie: a tie
  // would force sqrt(d) to be rational, impossible for squarefree d >= 2.
  int sign() const {
    int sa = a_.sign(), sb = b_.sign();
    if (sb == 0) return sa;
    if (sa == 0) return sb;
    if (sa == sb) return sa;
    Rational lhs = a_ * a_, rhs = b_ * b_ * Rational(d_);
    if (lhs == rhs) fail("ParseError", "sqrt(d) rational: d not squarefree");
    return (lhs > rhs) ? sa : sb;
  }

  QuadNum abs() const { return sign() < 0 ? -*this : *this; }

  double to_double() const { return a_.to_double() + b_.to_double() * std::sqrt((double)d_); }
  long double to_long_double() const {
    return a_.to_long_double() + b_.to_long_double() * sqrtl((long double)d_);
  }

  friend QuadNum operator+(const QuadNum& x, const QuadNum& y) {
    return QuadNum(x.a_ + y.a_, x.b_ + y.b_, merged_d(x, y));
  }
  friend QuadNum operator-(const QuadNum& x, const QuadNum& y) {
    return QuadNum(x.a_ - y.a_, x.b_ - y.b_, merged_d(x, y));
  }
  QuadNum operator-() const { return QuadNum(-a_, -b_, d_ == 0 ? 2 : d_); }
  friend QuadNum operator*(const QuadNum& x, const QuadNum& y) {
    long d = merged_d(x, y);
    return QuadNum(x.a_ * y.a_ + x.b_ * y.b_ * Rational(d),
                   x.a_ * y.b_ + x.b_ * y.a_, d == 0 ? 2 : d);
  }
  friend QuadNum operator/(const QuadNum& x, const QuadNum& y) {
    require(!y.is_zero(), "DivisionByZero", "division by zero field element");
    Rational n = y.norm();
    QuadNum t = x * y.conj();
    return QuadNum(t.a_ / n, t.b_ / n, merged_d(x, y));
  }
  QuadNum inverse() const { return QuadNum(1) / *this; }

  QuadNum& operator+=(const QuadNum& y) { *this = *this + y; return *this; }
  QuadNum& operator-=(const QuadNum& y) { *this = *this - y; return *this; }
  QuadNum& operator*=(const QuadNum& y) { *this = *this * y; return *this; }
  QuadNum& operator/=(const QuadNum& y) { *this = *this / y; return *this; }

  friend bool operator==(const QuadNum& x, const QuadNum& y) {
    return x.a_ == y.a_ && x.b_ == y.b_ && (x.b_.is_zero() || x.d_ == y.d_);
  }
  friend bool operator!=(const QuadNum& x, const QuadNum& y) { return !(x == y); }
  friend bool operator<(const QuadNum& x, const QuadNum& y) { return (x - y).sign() < 0; }
  friend bool operator<=(const QuadNum& x, const QuadNum& y) { return (x - y).sign() <= 0; }
  friend bool operator>(const QuadNum& x, const QuadNum& y) { return (x - y).sign() > 0; }
  friend bool operator>=(const QuadNum& x, const QuadNum& y) { return (x - y).sign() >= 0; }

  std::string str() const {
    if (is_rational()) return a_.str();
    std::string s = a_.is_zero() ? "" : a_.str();
    if (b_.sign() > 0 && !a_.is_zero()) s += "+";
    if (b_ == Rational(-1)) s += "-";
    else if (b_ != Rational(1)) s += b_.str() + "*";
    s += "sqrt(" + std::to_string(d_) + ")";
    return s;
  }

  friend std::ostream& operator<<(std::ostream& os, const QuadNum& x) { return os << x.str(); }

 private:
  static long merged_d(const QuadNum& x, const QuadNum& y) {
    if (x.d_ == 0) return y.d_;
    if (y.d_ == 0 || x.d_ == y.d_) return x.d_;
    fail("MixedField", "mixing sqrt(" + std::to_string(x.d_) + ") with sqrt(" + std::to_string(y.d_) + ")");
  }

  Rational a_, b_;
  long d_;
};

}  // namespace flatlab
