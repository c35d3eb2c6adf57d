#pragma once

#include <cmath>
#include <ostream>

#include "flatlab/errors.hpp"
#include "flatlab/quadnum.hpp"

namespace flatlab {

/**
 * Coordinate-kernel abstraction.  The geometry code is generic over the
 * scalar type: QuadNum gives exact predicates (the default for everything
 * that feeds equation checking), double gives a tolerant desk-scale kernel
 * used only by the inexact constructions.  Operations that require exactness
 * gate on kernel_traits<K>::exact at compile time.
 */
template <class K>
struct kernel_traits;

template <>
struct kernel_traits<QuadNum> {
  static constexpr bool exact = true;
  // scale is ignored: signs are decided by exact arithmetic
  static int sign(const QuadNum& v, const QuadNum& = QuadNum()) { return v.sign(); }
  static double approx(const QuadNum& v) { return v.to_double(); }
};

template <>
struct kernel_traits<double> {
  static constexpr bool exact = false;
  static constexpr double rel_eps = 1e-9;
  static int sign(double v, double scale = 0.0) {
    double cut = rel_eps * (std::abs(scale) + 1.0);
    if (v > cut) return 1;
    if (v < -cut) return -1;
    return 0;
  }
  static double approx(double v) { return v; }
};

template <class K>
struct Vec2 {
  K x{}, y{};

  Vec2() = default;
  Vec2(K xx, K yy) : x(std::move(xx)), y(std::move(yy)) {}

  friend Vec2 operator+(const Vec2& u, const Vec2& v) { return {u.x + v.x, u.y + v.y}; }
  friend Vec2 operator-(const Vec2& u, const Vec2& v) { return {u.x - v.x, u.y - v.y}; }
  Vec2 operator-() const { return {-x, -y}; }
  friend Vec2 operator*(const K& s, const Vec2& v) { return {s * v.x, s * v.y}; }
  Vec2& operator+=(const Vec2& v) { x += v.x; y += v.y; return *this; }
  Vec2& operator-=(const Vec2& v) { x -= v.x; y -= v.y; return *this; }
  friend bool operator==(const Vec2& u, const Vec2& v) { return u.x == v.x && u.y == v.y; }
  friend bool operator!=(const Vec2& u, const Vec2& v) { return !(u == v); }

  bool is_zero() const { return x == K(0) && y == K(0); }

  friend std::ostream& operator<<(std::ostream& os, const Vec2& v) {
    return os << "(" << v.x << ", " << v.y << ")";
  }
};

template <class K>
K cross(const Vec2<K>& u, const Vec2<K>& v) {
  return u.x * v.y - u.y * v.x;
}

template <class K>
K dot(const Vec2<K>& u, const Vec2<K>& v) {
  return u.x * v.x + u.y * v.y;
}

// magnitude proxy |vx| + |vy|, used only to scale floating tolerances
inline double mag1(const Vec2<double>& v) { return std::abs(v.x) + std::abs(v.y); }
inline QuadNum mag1(const Vec2<QuadNum>& v) { return QuadNum(); }

template <class K>
int cross_sign(const Vec2<K>& u, const Vec2<K>& v) {
  return kernel_traits<K>::sign(cross(u, v), mag1(u) * mag1(v));
}

template <class K>
int dot_sign(const Vec2<K>& u, const Vec2<K>& v) {
  return kernel_traits<K>::sign(dot(u, v), mag1(u) * mag1(v));
}

// u and v point the same way (parallel, positive proportionality)
template <class K>
bool parallel_same(const Vec2<K>& u, const Vec2<K>& v) {
  return cross_sign(u, v) == 0 && dot_sign(u, v) > 0;
}

/**
 * Does the ray direction r lie in the half-open cone swept counterclockwise
 * from u to v?  Requires the sweep angle to be in (0, pi); the cone is open
 * at u and closed at v.  This is the primitive behind the exact cone-angle
 * count: walking the outgoing edges around a vertex, each full turn crosses
 * the starting direction exactly once under this convention.
 */
template <class K>
bool ccw_cone_contains(const Vec2<K>& u, const Vec2<K>& v, const Vec2<K>& r) {
  if (parallel_same(r, v)) return true;
  if (parallel_same(r, u)) return false;
  return cross_sign(u, r) > 0 && cross_sign(r, v) > 0;
}

template <class K>
struct Mat2 {
  K a{}, b{}, c{}, d{};  // row-major [[a, b], [c, d]]

  static Mat2 identity() { return {K(1), K(0), K(0), K(1)}; }
  static Mat2 shear_u(const K& t) { return {K(1), t, K(0), K(1)}; }      // upper unipotent
  static Mat2 shear_v(const K& t) { return {K(1), K(0), t, K(1)}; }      // lower unipotent
  static Mat2 diag(const K& p, const K& q) { return {p, K(0), K(0), q}; }

  K det() const { return a * d - b * c; }

  friend Vec2<K> operator*(const Mat2& m, const Vec2<K>& v) {
    return {m.a * v.x + m.b * v.y, m.c * v.x + m.d * v.y};
  }
  friend Mat2 operator*(const Mat2& m, const Mat2& n) {
    return {m.a * n.a + m.b * n.c, m.a * n.b + m.b * n.d,
            m.c * n.a + m.d * n.c, m.c * n.b + m.d * n.d};
  }
  friend bool operator==(const Mat2& m, const Mat2& n) {
    return m.a == n.a && m.b == n.b && m.c == n.c && m.d == n.d;
  }
};

}  // namespace flatlab
