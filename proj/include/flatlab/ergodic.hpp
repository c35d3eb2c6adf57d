#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "flatlab/delaunay.hpp"
#include "flatlab/errors.hpp"
#include "flatlab/geometry.hpp"
#include "flatlab/quadnum.hpp"
#include "flatlab/rational.hpp"
#include "flatlab/rel.hpp"
#include "flatlab/saddles.hpp"
#include "flatlab/surface.hpp"

namespace flatlab {

/**
 * A named real-valued function of a surface.  Implementations must depend
 * only on the underlying flat structure, never on the triangulation used to
 * present it, so that averages along flows are independent of when the mesh
 * gets renormalized.
 */
struct Observable {
  std::string name;
  std::function<double(const ExactSurface&)> eval;
};

namespace detail {

// Length of the shortest saddle connection.  On a canonical (Delaunay) mesh
// the shortest edge realizes it: the diametral disk of a shortest connection
// contains no cone point, which makes that segment an edge of every Delaunay
// triangulation.
inline double systole_of(const ExactSurface& s) {
  const ExactSurface c = delaunay_canonicalize(s);
  QuadNum best = dot(c.edge[0], c.edge[0]);
  for (const auto& e : c.edge) {
    const QuadNum q = dot(e, e);
    if (q < best) best = q;
  }
  return std::sqrt(best.to_double());
}

inline std::string format_double(double x) {
  std::ostringstream os;
  os << x;
  return os.str();
}

}  // namespace detail

/** Shortest-connection length, capped at `cap` so the observable is bounded. */
inline Observable truncated_systole(double cap = 8.0) {
  require(cap > 0, "DomainError", "the systole cap must be positive");
  return Observable{"systole-min-" + detail::format_double(cap),
                    [cap](const ExactSurface& s) {
                      return std::min(cap, detail::systole_of(s));
                    }};
}

/** Number of oriented saddle connections of length at most `bound`. */
inline Observable connection_count(const QuadNum& bound, long max_nodes = 1000000) {
  require(bound.sign() > 0, "DomainError", "the counting bound must be positive");
  return Observable{"connections-below-" + bound.str(),
                    [bound, max_nodes](const ExactSurface& s) {
                      return static_cast<double>(
                          enumerate_saddle_connections(s, bound, max_nodes).size());
                    }};
}

/**
 * Width of the horizontal displacement interval, with each endpoint clamped
 * to magnitude `cap`; a side that stays open within `bound` reads as `cap`.
 */
inline Observable interval_width(const QuadNum& bound, double cap) {
  require(cap > 0, "DomainError", "the width cap must be positive");
  return Observable{"interval-width-min-" + detail::format_double(cap),
                    [bound, cap](const ExactSurface& s) {
                      const HorizontalInterval iv = horizontal_interval(s, bound);
                      const double right =
                          iv.right ? std::min(cap, iv.right->to_double()) : cap;
                      const double left =
                          iv.left ? std::max(-cap, iv.left->to_double()) : -cap;
                      return right - left;
                    }};
}

/** One step of the horizontal shear flow, returned on the canonical mesh. */
inline ExactSurface flow_u(const ExactSurface& s, const QuadNum& t) {
  return delaunay_canonicalize(apply_sl2(s, Mat2<QuadNum>::shear_u(t)));
}

namespace detail {

inline long ceil_count(const Rational& total, const Rational& step, long cap) {
  require(total.sign() > 0 && step.sign() > 0, "DomainError",
          "averaging lengths and step sizes must be positive");
  const Rational q = total / step;
  mpz_class n;
  mpz_cdiv_q(n.get_mpz_t(), q.num().get_mpz_t(), q.den().get_mpz_t());
  require(n.fits_slong_p() && n.get_si() <= cap, "DomainError",
          "the requested step size needs more than " + std::to_string(cap) +
              " samples");
  return std::max(1L, n.get_si());
}

// Square root of a rational, exact on perfect squares and a fixed-precision
// rational approximation otherwise, so sample grids stay exact.
inline Rational rational_sqrt(const Rational& x) {
  require(x.sign() > 0, "DomainError", "square roots need a positive argument");
  mpz_class num = x.num(), den = x.den();
  if (mpz_perfect_square_p(num.get_mpz_t()) && mpz_perfect_square_p(den.get_mpz_t())) {
    mpz_class rn, rd;
    mpz_sqrt(rn.get_mpz_t(), num.get_mpz_t());
    mpz_sqrt(rd.get_mpz_t(), den.get_mpz_t());
    return Rational(rn, rd);
  }
  const long double r = sqrtl(x.to_long_double());
  require(r < 9.0e9L, "DomainError", "square-root argument too large to sample");
  return Rational(static_cast<long>(llroundl(r * 1e9L)), 1000000000L);
}

// Mean of obs over the n midpoint samples t = (i + 1/2) h, marching the
// surface incrementally and renormalizing the mesh whenever the accumulated
// shear exceeds 1 (or after 16 small steps) to keep coordinates tame.
inline double midpoint_u_mean(const Observable& obs, const ExactSurface& start,
                              const Rational& h, long n, long* renorms) {
  const Mat2<QuadNum> step = Mat2<QuadNum>::shear_u(QuadNum(h));
  ExactSurface cur = apply_sl2(start, Mat2<QuadNum>::shear_u(QuadNum(h / 2)));
  Rational pending = h / 2;
  double acc = 0;
  int small_steps = 0;
  for (long i = 0; i < n; ++i) {
    if (pending > Rational(1) || ++small_steps >= 16) {
      cur = delaunay_canonicalize(cur);
      pending = Rational(0);
      small_steps = 0;
      if (renorms) ++(*renorms);
    }
    acc += obs.eval(cur);
    if (i + 1 < n) {
      cur = apply_sl2(cur, step);
      pending += h;
    }
  }
  return acc / static_cast<double>(n);
}

}  // namespace detail

/**
 * A quadrature value together with a step-halving error estimate: the value
 * comes from the finer grid and the estimate is the gap to the coarser one.
 */
struct QuadratureResult {
  double value = 0;
  double err = 0;
  long renormalizations = 0;
};

/**
 * Time average of `obs` along the shear flow, (1/T) of the integral over
 * [0, T], by the composite midpoint rule with step ~dt.  The returned value
 * uses step h/2 and the error field is the gap to the step-h estimate; the
 * two grids do not share sample points, so agreement is meaningful.
 */
inline QuadratureResult average_A_U(const Observable& obs, const ExactSurface& s,
                                    const Rational& T, const Rational& dt) {
  const long n = detail::ceil_count(T, dt, 10000000);
  const Rational h = T / Rational(n);
  QuadratureResult out;
  const double coarse = detail::midpoint_u_mean(obs, s, h, n, &out.renormalizations);
  const double fine =
      detail::midpoint_u_mean(obs, s, h / 2, 2 * n, &out.renormalizations);
  out.value = fine;
  out.err = std::abs(coarse - fine);
  return out;
}

/**
 * Averaging result over the two-parameter family: shear time t in [0, T] and
 * horizontal displacement s in [0, sqrt(T)].  `err_t` and `err_s` are the
 * step-halving estimates of the two one-dimensional quadratures and `err` is
 * their sum.
 */
struct SheetAverage {
  double value = 0;
  double err = 0;
  double err_t = 0;
  double err_s = 0;
  long renormalizations = 0;
};

/**
 * Average of `obs` over the sheet { u^t x^s M : t in [0,T], s in [0,sqrt(T)] }
 * by a product midpoint rule.  Each displacement sample is produced from the
 * base surface directly (cone-point classes may be relabeled between
 * presentations, so displaced surfaces are never chained).  If the horizontal
 * displacement interval closes before sqrt(T) the sheet leaves the stratum
 * and the call refuses with RelDegeneration, reporting the boundary point.
 */
inline SheetAverage average_A_UX(const Observable& obs, const ExactSurface& s,
                                 const Rational& T, const Rational& dt,
                                 const Rational& ds) {
  const long n = detail::ceil_count(T, dt, 10000000);
  const Rational h = T / Rational(n);
  const Rational r = detail::rational_sqrt(T);
  const long m = detail::ceil_count(r, ds, 1000000);
  require(m <= 25000000 / n, "DomainError",
          "the sheet grid has too many samples; coarsen dt or ds");
  const Rational g = r / Rational(m);

  // probe the displacement interval only out to a modest bound: the cost of
  // the development search grows quickly with the bound, and an endpoint
  // beyond the probe is still caught exactly by the per-slice deformations
  QuadNum probe = QuadNum(r) + QuadNum(1);
  if (QuadNum(8) < probe) probe = QuadNum(8);
  const HorizontalInterval iv = horizontal_interval(s, probe);
  if (iv.right && *iv.right <= QuadNum(r)) {
    QuadNum threshold = *iv.right;
    if (iv.left && -*iv.left < threshold) threshold = -*iv.left;
    fail("RelDegeneration",
         "the displacement orbit hits a boundary point at s = " + iv.right->str() +
             " inside the sampling range [0, " + r.str() +
             "]; displacements stay bounded only below s = " + threshold.str());
  }

  SheetAverage out;
  auto sweep = [&](const Rational& hh, long nn, const Rational& gg, long mm) {
    double acc = 0;
    Rational sj = gg / 2;
    for (long j = 0; j < mm; ++j) {
      RelOutcome slice;
      try {
        slice = rel_translate(s, 0, {QuadNum(sj), QuadNum(0)});
      } catch (const Error& e) {
        if (e.code() != "CollisionBeyondBoundary") throw;
        fail("RelDegeneration",
             "the displacement orbit leaves the stratum before s = " + sj.str() +
                 " inside the sampling range");
      }
      require(!slice.degenerate, "RelDegeneration",
              "the displacement orbit degenerated at s = " + sj.str() +
                  " inside the checked range");
      acc += detail::midpoint_u_mean(obs, slice.surface, hh, nn,
                                     &out.renormalizations);
      sj += gg;
    }
    return acc / static_cast<double>(mm);
  };
  const double coarse = sweep(h, n, g, m);
  const double fine_t = sweep(h / 2, 2 * n, g, m);
  const double fine_ts = sweep(h / 2, 2 * n, g / 2, 2 * m);
  out.value = fine_ts;
  out.err_t = std::abs(coarse - fine_t);
  out.err_s = std::abs(fine_t - fine_ts);
  out.err = out.err_t + out.err_s;
  return out;
}

/** Fraction of midpoint samples along [0, T] whose systole is at least eps. */
struct RecurrenceProfile {
  double fraction = 0;
  long samples = 0;
};

inline RecurrenceProfile recurrence_profile(const ExactSurface& s, double eps,
                                            const Rational& T, const Rational& dt) {
  require(eps > 0, "DomainError", "the recurrence threshold must be positive");
  const long n = detail::ceil_count(T, dt, 10000000);
  const Rational h = T / Rational(n);
  const Observable thick{"recurrence-indicator", [eps](const ExactSurface& x) {
                           return detail::systole_of(x) >= eps ? 1.0 : 0.0;
                         }};
  RecurrenceProfile out;
  out.samples = n;
  out.fraction = detail::midpoint_u_mean(thick, s, h, n, nullptr);
  return out;
}

/** Grid resolution rule for experiments: samples per averaging direction. */
struct GridSteps {
  long t_samples = 256;
  long s_samples = 16;
};

/** One (surface, T) cell of an experiment: a sheet average or a failure. */
struct ErgodicCell {
  Rational T;
  bool ok = false;
  double value = 0;
  double err = 0;
  std::string error;  // error code + message when !ok
  long renormalizations = 0;
  double wall_ms = 0;
};

/** All cells for one surface, in schedule order. */
struct ErgodicRun {
  std::string surface;
  std::string observable;
  std::vector<ErgodicCell> cells;
  std::vector<double> increments;  // |value gaps| between consecutive ok cells
};

/** Experiment output: one run per surface plus the cross-surface spread. */
struct ExperimentTable {
  std::vector<Rational> schedule;
  std::vector<ErgodicRun> runs;
  std::vector<double> spread;  // per schedule entry; NaN with fewer than 2 values
};

/**
 * Sheet averages of one observable over several surfaces and a growing time
 * schedule.  A degenerating displacement orbit marks its cell as failed and
 * the experiment continues; any other error aborts.
 */
inline ExperimentTable equidistribution_experiment(
    const std::vector<ExactSurface>& surfaces, const Observable& obs,
    const std::vector<Rational>& schedule, const GridSteps& grid = {}) {
  require(!surfaces.empty(), "DomainError", "no surfaces to average over");
  require(!schedule.empty(), "DomainError", "the time schedule is empty");
  for (std::size_t k = 1; k < schedule.size(); ++k)
    require(schedule[k - 1] < schedule[k], "DomainError",
            "the time schedule must strictly increase");
  require(grid.t_samples >= 1 && grid.s_samples >= 1, "DomainError",
          "grid resolutions must be at least 1");

  ExperimentTable table;
  table.schedule = schedule;
  for (std::size_t i = 0; i < surfaces.size(); ++i) {
    ErgodicRun run;
    run.surface = surfaces[i].label.empty()
                      ? "surface-" + std::to_string(i)
                      : surfaces[i].label;
    run.observable = obs.name;
    for (const Rational& T : schedule) {
      ErgodicCell cell;
      cell.T = T;
      const Rational dt = T / Rational(grid.t_samples);
      const Rational ds = detail::rational_sqrt(T) / Rational(grid.s_samples);
      const auto t0 = std::chrono::steady_clock::now();
      try {
        const SheetAverage avg = average_A_UX(obs, surfaces[i], T, dt, ds);
        cell.ok = true;
        cell.value = avg.value;
        cell.err = avg.err;
        cell.renormalizations = avg.renormalizations;
      } catch (const Error& e) {
        if (e.code() != "RelDegeneration") throw;
        cell.error = e.what();
      }
      const auto t1 = std::chrono::steady_clock::now();
      cell.wall_ms =
          std::chrono::duration_cast<std::chrono::duration<double, std::milli>>(t1 - t0)
              .count();
      run.cells.push_back(cell);
    }
    bool have_prev = false;
    double prev = 0;
    for (const ErgodicCell& cell : run.cells) {
      if (!cell.ok) continue;
      if (have_prev) run.increments.push_back(std::abs(cell.value - prev));
      prev = cell.value;
      have_prev = true;
    }
    table.runs.push_back(std::move(run));
  }
  for (std::size_t k = 0; k < schedule.size(); ++k) {
    double lo = 0, hi = 0;
    int seen = 0;
    for (const ErgodicRun& run : table.runs) {
      if (!run.cells[k].ok) continue;
      const double v = run.cells[k].value;
      if (seen == 0) {
        lo = hi = v;
      } else {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      ++seen;
    }
    table.spread.push_back(seen >= 2 ? hi - lo
                                     : std::numeric_limits<double>::quiet_NaN());
  }
  return table;
}

}  // namespace flatlab
