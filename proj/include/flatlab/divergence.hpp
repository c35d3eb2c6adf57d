#pragma once

#include <array>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <string>
#include <type_traits>
#include <utility>

#include "flatlab/errors.hpp"
#include "flatlab/geometry.hpp"
#include "flatlab/rational.hpp"

namespace flatlab {

namespace detail {

template <class R>
R field_abs(const R& x) {
  if constexpr (std::is_floating_point_v<R>) {
    return std::abs(x);
  } else {
    return x.sign() < 0 ? -x : x;
  }
}

}  // namespace detail

/**
 * 3x3 matrix over R (double or an exact field) realizing the group of
 * unimodular affine maps of the plane: upper-left 2x2 block of determinant
 * one, translation vector in the third column, bottom row (0,0,1).  The
 * named one-parameter subgroups are the horizontal shear u, its transpose v,
 * the diagonal a (parametrized by e^s, so it stays in the field), and the
 * two translations x and y.
 */
template <class R>
struct Mat3 {
  std::array<R, 9> m{};

  R& at(int i, int j) { return m[3 * i + j]; }
  const R& at(int i, int j) const { return m[3 * i + j]; }

  static Mat3 identity() {
    Mat3 e;
    e.at(0, 0) = R(1);
    e.at(1, 1) = R(1);
    e.at(2, 2) = R(1);
    return e;
  }
  static Mat3 shear_u(const R& t) {
    Mat3 g = identity();
    g.at(0, 1) = t;
    return g;
  }
  static Mat3 shear_v(const R& t) {
    Mat3 g = identity();
    g.at(1, 0) = t;
    return g;
  }
  // the diagonal subgroup, given by its upper entry lambda = e^s > 0
  static Mat3 dilate(const R& lambda) {
    require(!(lambda == R(0)), "DomainError", "dilation with zero entry");
    Mat3 g = identity();
    g.at(0, 0) = lambda;
    g.at(1, 1) = R(1) / lambda;
    return g;
  }
  static Mat3 translate_x(const R& s) {
    Mat3 g = identity();
    g.at(0, 2) = s;
    return g;
  }
  static Mat3 translate_y(const R& r) {
    Mat3 g = identity();
    g.at(1, 2) = r;
    return g;
  }

  bool bottom_row_ok() const {
    return at(2, 0) == R(0) && at(2, 1) == R(0) && at(2, 2) == R(1);
  }

  Mat3 inverse() const {
    // affine inverse, using that the linear block has determinant one
    const R det = at(0, 0) * at(1, 1) - at(0, 1) * at(1, 0);
    if constexpr (std::is_floating_point_v<R>) {
      require(std::abs(det - R(1)) <= 1e-12, "NotUnimodular",
              "linear block determinant is not 1");
    } else {
      require(det == R(1), "NotUnimodular",
              "linear block determinant is not 1");
    }
    Mat3 inv = identity();
    inv.at(0, 0) = at(1, 1);
    inv.at(0, 1) = -at(0, 1);
    inv.at(1, 0) = -at(1, 0);
    inv.at(1, 1) = at(0, 0);
    inv.at(0, 2) = -(inv.at(0, 0) * at(0, 2) + inv.at(0, 1) * at(1, 2));
    inv.at(1, 2) = -(inv.at(1, 0) * at(0, 2) + inv.at(1, 1) * at(1, 2));
    return inv;
  }

  friend Mat3 operator*(const Mat3& p, const Mat3& q) {
    Mat3 out;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        R acc = p.at(i, 0) * q.at(0, j);
        acc += p.at(i, 1) * q.at(1, j);
        acc += p.at(i, 2) * q.at(2, j);
        out.at(i, j) = acc;
      }
    return out;
  }
  friend bool operator==(const Mat3& p, const Mat3& q) { return p.m == q.m; }
  friend bool operator!=(const Mat3& p, const Mat3& q) { return !(p == q); }
};

using GroupElement3 = Mat3<double>;
using ExactGroupElement3 = Mat3<Rational>;

/**
 * Realizes the pair (g, (x,y)) — a linear map followed by a translation —
 * as a 3x3 matrix: the linear block is g and the third column carries the
 * image of (x,y) under g.
 */
template <class R>
Mat3<R> embed(const Mat2<R>& g, const R& x, const R& y) {
  if constexpr (std::is_floating_point_v<R>) {
    require(std::abs(g.det() - R(1)) <= 1e-12, "NotUnimodular",
            "matrix determinant is not 1");
  } else {
    require(g.det() == R(1), "NotUnimodular", "matrix determinant is not 1");
  }
  Mat3<R> out = Mat3<R>::identity();
  out.at(0, 0) = g.a;
  out.at(0, 1) = g.b;
  out.at(1, 0) = g.c;
  out.at(1, 1) = g.d;
  out.at(0, 2) = g.a * x + g.b * y;
  out.at(1, 2) = g.c * x + g.d * y;
  return out;
}

/**
 * The unique shear amount f with u^f g u^{-t} upper triangular:
 * f = (t*a - b) / (d - t*c).  Undefined where the denominator vanishes.
 */
template <class R>
R f_of(const Mat2<R>& g, const R& t) {
  const R den = g.d - t * g.c;
  require(!(den == R(0)), "PoleAtT",
          "shear compensation undefined: d - t*c vanishes");
  return (t * g.a - g.b) / den;
}

/**
 * u^{f(g,t)} * embed(g,x,y) * u^{-t}.  By the choice of f its (0,1) entry
 * cancels exactly, leaving a lower-triangular linear block whose diagonal
 * is (a + f*c, d - t*c) and a translation column (ax+by + f*(cx+dy),
 * cx+dy).
 */
template <class R>
Mat3<R> conjugated_product(const Mat2<R>& g, const R& x, const R& y,
                           const R& t) {
  const R f = f_of(g, t);
  return Mat3<R>::shear_u(f) * embed(g, x, y) * Mat3<R>::shear_u(-t);
}

/**
 * The probing time min(delta/|c|, delta/|y|), reading delta/0 as infinite.
 * By construction it satisfies t*|c| = delta or t*|y| = delta, whichever
 * constraint binds first.
 */
template <class R>
R t_k_rule(const R& c, const R& y, const R& delta) {
  const R ac = detail::field_abs(c), ay = detail::field_abs(y);
  require(!(ac == R(0) && ay == R(0)), "BothZero",
          "probing time needs c or y nonzero");
  if (ac == R(0)) return delta / ay;
  if (ay == R(0)) return delta / ac;
  const R big = ac < ay ? ay : ac;  // larger magnitude gives the smaller time
  return delta / big;
}

/** One term of a sequence in the affine group, split as (g_k, x_k, y_k). */
struct SequenceTerm {
  Mat2<double> g;
  double x = 0, y = 0;
};

/**
 * A sequence (g_k, x_k, y_k) with g_k x_k y_k converging to the identity,
 * together with the probing depth delta used to renormalize it.
 */
struct DivergenceSequence {
  std::function<SequenceTerm(long)> term;
  double delta = 0.1;
};

/** c_k = scale_c/k shrinks slower than y_k = scale_y/k^2: |y| <= |c|. */
inline DivergenceSequence case_a_sequence(double delta, double scale_c = 1.0,
                                          double scale_y = 1.0) {
  return {[=](long k) {
            SequenceTerm s;
            s.g = Mat2<double>::shear_v(scale_c / static_cast<double>(k));
            s.y = scale_y / (static_cast<double>(k) * static_cast<double>(k));
            return s;
          },
          delta};
}

/** c_k = scale_c/k^2 shrinks faster than y_k = scale_y/k: |c| <= |y|. */
inline DivergenceSequence case_b_sequence(double delta, double scale_c = 1.0,
                                          double scale_y = 1.0) {
  return {[=](long k) {
            SequenceTerm s;
            s.g = Mat2<double>::shear_v(
                scale_c / (static_cast<double>(k) * static_cast<double>(k)));
            s.y = scale_y / static_cast<double>(k);
            return s;
          },
          delta};
}

/**
 * Where the renormalized products u^{f_k} g_k x_k y_k u^{-t_k} accumulate.
 * The limit element is reported in coordinates (lambda, mu) for the diagonal
 * block and x_part for the translation it carries; the target region depends
 * on which of |c_k|, |y_k| dominates:
 *   dominant c ("A"): diagonal fixed at 1 -+ delta, x_part confined to
 *     [-delta/(1-delta), delta/(1-delta)];
 *   dominant y ("B"): diagonal anywhere between 1-delta and 1+delta, |x_part|
 *     confined to [delta/(1+delta), delta/(1-delta)].
 */
struct LimitReport {
  std::string which_case;  // "A" or "B"
  double lambda = 0, mu = 0;  // diagonal of the limiting linear block
  double x_part = 0, y_part = 0;
  double distance = 0;  // to the target region
  bool cauchy = false;
  bool pass = false;
};

namespace detail {

inline double interval_distance(double v, double lo, double hi) {
  if (v < lo) return lo - v;
  if (v > hi) return v - hi;
  return 0.0;
}

}  // namespace detail

/** Region measurements of one renormalized product, for reports and CSVs. */
struct RegionSample {
  double lambda = 0, mu = 0;
  double x_part = 0, y_part = 0;
  double diag = 0;      // distance of (lambda, mu) to the case's diagonal target
  double xdist = 0;     // distance of x_part to the case's interval(s)
  double stray = 0;     // magnitude of the entries that must vanish
  double distance = 0;  // max of the three
};

/**
 * Measures how far a renormalized product sits from the limit region of the
 * chosen case: in case A the diagonal accumulates on the two points
 * (1/(1-delta), 1-delta), (1/(1+delta), 1+delta) with x in one interval; in
 * case B the diagonal fills the sandwiched intervals and |x| is pinched
 * between delta/(1+delta) and delta/(1-delta).
 */
inline RegionSample region_sample(bool case_a, double delta,
                                  const GroupElement3& p) {
  require(delta > 0 && delta < 1, "DomainError",
          "probing depth must lie strictly between 0 and 1");
  RegionSample r;
  r.lambda = p.at(0, 0);
  r.mu = p.at(1, 1);
  r.x_part = p.at(0, 2) / p.at(0, 0);  // strip the dilation off the column
  r.y_part = p.at(1, 2);
  r.stray = std::max(std::abs(p.at(1, 0)), std::abs(r.y_part));
  if (case_a) {
    const double low = std::max(std::abs(r.lambda - 1 / (1 - delta)),
                                std::abs(r.mu - (1 - delta)));
    const double high = std::max(std::abs(r.lambda - 1 / (1 + delta)),
                                 std::abs(r.mu - (1 + delta)));
    r.diag = std::min(low, high);
    r.xdist = detail::interval_distance(r.x_part, -delta / (1 - delta),
                                        delta / (1 - delta));
  } else {
    r.diag = std::max(
        detail::interval_distance(r.lambda, 1 / (1 + delta), 1 / (1 - delta)),
        detail::interval_distance(r.mu, 1 - delta, 1 + delta));
    r.xdist = detail::interval_distance(std::abs(r.x_part), delta / (1 + delta),
                                        delta / (1 - delta));
  }
  r.distance = std::max({r.diag, r.xdist, r.stray});
  return r;
}

inline LimitReport limit_region_check(const DivergenceSequence& seq, long kmax,
                                      double tol = 1e-3) {
  require(kmax >= 16, "DomainError", "limit check needs kmax >= 16");
  const double delta = seq.delta;
  require(delta > 0 && delta < 1, "DomainError",
          "probing depth must lie strictly between 0 and 1");

  const std::array<long, 3> ks = {kmax / 16, kmax / 4, kmax};
  std::array<Mat3<double>, 3> mats{};
  std::array<std::array<double, 5>, 3> pts{};
  int dominant = 0;  // +1 when |y| <= |c| throughout, -1 when |c| <= |y|
  for (int i = 0; i < 3; ++i) {
    const SequenceTerm s = seq.term(ks[i]);
    require(s.g.c * s.y != 0.0, "CaseUndetermined",
            "hypothesis c*y != 0 fails at k = " + std::to_string(ks[i]));
    const int here = std::abs(s.y) <= std::abs(s.g.c) ? 1 : -1;
    require(i == 0 || here == dominant, "CaseUndetermined",
            "neither |c| nor |y| dominates along the sequence");
    dominant = here;
    const double t = t_k_rule(s.g.c, s.y, delta);
    const Mat3<double> p = conjugated_product(s.g, s.x, s.y, t);
    mats[i] = p;
    pts[i] = {p.at(0, 0), p.at(1, 1), p.at(1, 0), p.at(0, 2), p.at(1, 2)};
  }

  const auto dist = [](const std::array<double, 5>& u,
                       const std::array<double, 5>& v) {
    double acc = 0;
    for (int j = 0; j < 5; ++j) acc += (u[j] - v[j]) * (u[j] - v[j]);
    return std::sqrt(acc);
  };
  const double d1 = dist(pts[0], pts[1]), d2 = dist(pts[1], pts[2]);

  LimitReport rep;
  rep.which_case = dominant > 0 ? "A" : "B";
  rep.cauchy = d2 == 0.0 || 2 * d2 <= d1;
  const RegionSample last = region_sample(dominant > 0, delta, mats[2]);
  rep.lambda = last.lambda;
  rep.mu = last.mu;
  rep.x_part = last.x_part;
  rep.y_part = last.y_part;
  rep.distance = last.distance;
  rep.pass = rep.cauchy && rep.distance <= tol;
  return rep;
}

/**
 * Conjugation by the diagonal subgroup rescales the three unipotent
 * directions exactly: a u^t x^s a^{-1} = u^{t*l^2} x^{s*l} and
 * a y^r a^{-1} = y^{r/l}, where l is the upper diagonal entry of a.
 * Exact entrywise equality over the rationals.
 */
inline bool rescale_identity_check(const Rational& e_tau, const Rational& t,
                                   const Rational& s) {
  require(e_tau.sign() > 0, "DomainError", "dilation entry must be positive");
  using M = Mat3<Rational>;
  const M a = M::dilate(e_tau);
  const M lhs = a * M::shear_u(t) * M::translate_x(s) * a.inverse();
  const M rhs = M::shear_u(t * e_tau * e_tau) * M::translate_x(s * e_tau);
  const M ylhs = a * M::translate_y(s) * a.inverse();
  const M yrhs = M::translate_y(s / e_tau);
  return lhs == rhs && ylhs == yrhs;
}

/** Floating variant: verified up to an entrywise tolerance. */
inline bool rescale_identity_check(double tau, double t, double s,
                                   double tol = 1e-12) {
  using M = Mat3<double>;
  const double l = std::exp(tau);
  const M a = M::dilate(l);
  const M lhs = a * M::shear_u(t) * M::translate_x(s) * a.inverse();
  const M rhs = M::shear_u(t * l * l) * M::translate_x(s * l);
  const M ylhs = a * M::translate_y(s) * a.inverse();
  const M yrhs = M::translate_y(s / l);
  for (int i = 0; i < 9; ++i) {
    if (std::abs(lhs.m[i] - rhs.m[i]) > tol) return false;
    if (std::abs(ylhs.m[i] - yrhs.m[i]) > tol) return false;
  }
  return true;
}

}  // namespace flatlab
