#pragma once

#include <array>
#include <queue>
#include <string>
#include <vector>

#include "flatlab/delaunay.hpp"
#include "flatlab/surface.hpp"

namespace flatlab {

/**
 * The absolute-period module of a surface: the Z-module in Q^4 generated by
 * the holonomy vectors of all closed loops in the mesh's 1-skeleton, with a
 * field element x + y*sqrt(d) recorded as the four rationals
 * (x.a, x.b, y.a, y.b).  Stored canonically as the smallest positive
 * denominator den with den*M integral, together with the Hermite normal
 * form of den*M.  Deformations that move one cone point relative to another
 * change some saddle-connection holonomies but never closed-loop periods,
 * so this module is their invariant.
 */
struct PeriodModule {
  mpz_class den = 1;
  std::vector<std::array<mpz_class, 4>> rows;

  friend bool operator==(const PeriodModule& a, const PeriodModule& b) {
    return a.den == b.den && a.rows == b.rows;
  }
  friend bool operator!=(const PeriodModule& a, const PeriodModule& b) { return !(a == b); }
};

namespace detail {

// row Hermite normal form of an integer matrix with 4 columns: pivots
// positive, zeros below each pivot, entries above reduced into [0, pivot)
inline std::vector<std::array<mpz_class, 4>> hnf4(std::vector<std::array<mpz_class, 4>> rows) {
  size_t top = 0;
  for (int col = 0; col < 4 && top < rows.size(); ++col) {
    for (;;) {
      size_t best = rows.size();
      for (size_t i = top; i < rows.size(); ++i) {
        if (rows[i][col] != 0 &&
            (best == rows.size() || abs(rows[i][col]) < abs(rows[best][col])))
          best = i;
      }
      if (best == rows.size()) break;  // column exhausted below top
      std::swap(rows[top], rows[best]);
      bool reduced_all = true;
      for (size_t i = top + 1; i < rows.size(); ++i) {
        if (rows[i][col] == 0) continue;
        mpz_class q = rows[i][col] / rows[top][col];  // truncated; remainder shrinks
        for (int c = 0; c < 4; ++c) rows[i][c] -= q * rows[top][c];
        if (rows[i][col] != 0) reduced_all = false;
      }
      if (reduced_all) {
        if (rows[top][col] < 0)
          for (int c = 0; c < 4; ++c) rows[top][c] = -rows[top][c];
        for (size_t i = 0; i < top; ++i) {
          mpz_class q = rows[i][col] / rows[top][col];
          if (rows[i][col] % rows[top][col] < 0) q -= 1;  // floor division
          for (int c = 0; c < 4; ++c) rows[i][c] -= q * rows[top][c];
        }
        ++top;
        break;
      }
    }
  }
  rows.resize(top);
  return rows;
}

}  // namespace detail

inline PeriodModule period_module(const ExactSurface& s) {
  ConeData cd = cone_data(s);
  const int C = static_cast<int>(cd.points.size());
  const int H = s.half_edges();
  auto origin_class = [&](int h) { return cd.class_of[h]; };
  auto tip_class = [&](int h) { return cd.class_of[ExactSurface::next(h)]; };

  // breadth-first spanning tree on the vertex classes
  std::vector<Vec2<QuadNum>> pos(C);
  std::vector<char> seen(C, 0);
  std::vector<char> tree(H, 0);
  seen[0] = 1;
  std::queue<int> q;
  q.push(0);
  while (!q.empty()) {
    int u = q.front();
    q.pop();
    for (int h = 0; h < H; ++h) {
      if (origin_class(h) == u && !seen[tip_class(h)]) {
        int w = tip_class(h);
        seen[w] = 1;
        pos[w] = pos[u] + s.edge[h];
        tree[h] = tree[s.opp[h]] = 1;
        q.push(w);
      }
    }
  }

  // loop periods of the non-tree edges, as rational 4-vectors
  std::vector<std::array<Rational, 4>> gens;
  for (int h = 0; h < H; ++h) {
    if (h > s.opp[h] || tree[h]) continue;
    Vec2<QuadNum> loop = pos[origin_class(h)] + s.edge[h] - pos[tip_class(h)];
    gens.push_back({loop.x.a(), loop.x.b(), loop.y.a(), loop.y.b()});
  }

  mpz_class den = 1;
  for (const auto& g : gens)
    for (const auto& r : g) {
      mpz_class d = r.den();
      mpz_class gg;
      mpz_gcd(gg.get_mpz_t(), den.get_mpz_t(), d.get_mpz_t());
      den = den / gg * d;
    }
  std::vector<std::array<mpz_class, 4>> rows;
  for (const auto& g : gens) {
    std::array<mpz_class, 4> row;
    for (int c = 0; c < 4; ++c) row[c] = g[c].num() * (den / g[c].den());
    rows.push_back(std::move(row));
  }
  PeriodModule m;
  m.rows = detail::hnf4(std::move(rows));

  // normalize: divide out any common factor shared by den and all entries
  mpz_class g = den;
  for (const auto& r : m.rows)
    for (const auto& e : r) mpz_gcd(g.get_mpz_t(), g.get_mpz_t(), e.get_mpz_t());
  for (auto& r : m.rows)
    for (auto& e : r) e /= g;
  m.den = den / g;
  return m;
}

/**
 * Result of a relative deformation: either the deformed surface, or, when
 * cone points collide exactly at the end of the flow, a classification of
 * the degenerate limit with its flat pieces.
 */
struct RelOutcome {
  bool degenerate = false;
  ExactSurface surface;                  // valid when !degenerate
  std::string kind;                      // "H2_surface" or "two_tori_wedge"
  std::vector<ExactSurface> components;  // collapsed piece(s)
  long events = 0;                       // retriangulations performed en route
};

namespace detail {

// long edge of a zero-area triangle with no zero edge: the side opposing
// the other two (all three are parallel)
inline int sliver_long_edge(const ExactSurface& s, int t) {
  for (int i = 0; i < 3; ++i) {
    int h = 3 * t + i;
    if (dot_sign(s.edge[h], s.edge[ExactSurface::next(h)]) < 0 &&
        dot_sign(s.edge[h], s.edge[ExactSurface::prev(h)]) < 0)
      return h;
  }
  fail("Internal", "flat triangle without a long edge");
}

// would flipping h produce two positively-oriented triangles?
inline bool flip_is_valid(const ExactSurface& s, int h) {
  Vec2<QuadNum> dd = s.edge[ExactSurface::next(s.opp[h])];          // D
  Vec2<QuadNum> c = s.edge[h] + s.edge[ExactSurface::next(h)];      // C
  Vec2<QuadNum> b = s.edge[h];                                      // B
  return cross_sign(dd, c - dd) > 0 && cross_sign(b - dd, c - b) > 0;
}

/**
 * Remove all zero-area triangles (each has exactly one zero edge) from a
 * mesh whose arrays may be degenerate, regluing the survivors across the
 * collapsed bigons, and split the result into connected components.
 */
inline std::vector<ExactSurface> collapse_and_split(const ExactSurface& s) {
  const int F = s.faces(), H = s.half_edges();
  std::vector<char> keep(F, 1);
  for (int t = 0; t < F; ++t)
    if (cross_sign(s.edge[3 * t], s.edge[3 * t + 1]) == 0) {
      keep[t] = 0;
      bool has_zero = s.edge[3 * t].is_zero() || s.edge[3 * t + 1].is_zero() ||
                      s.edge[3 * t + 2].is_zero();
      require(has_zero, "UnsupportedStratum",
              "degeneration pinches a curve, not a pair of cone points");
    }

  auto sibling = [&](int q) {
    int t = ExactSurface::tri(q);
    for (int i = 0; i < 3; ++i) {
      int r = 3 * t + i;
      if (r != q && !s.edge[r].is_zero()) return r;
    }
    fail("Internal", "collapsed triangle has fewer than two nonzero edges");
  };
  auto skip = [&](int h) {
    int q = s.opp[h];
    for (int guard = 0; guard <= H; ++guard) {
      if (keep[ExactSurface::tri(q)]) return q;
      q = s.opp[sibling(q)];
    }
    fail("UnsupportedStratum", "collapse closes up into a loop of slivers");
  };

  // reglue across dropped triangles, then split into components
  std::vector<int> comp(F, -1);
  int ncomp = 0;
  for (int t0 = 0; t0 < F; ++t0) {
    if (!keep[t0] || comp[t0] != -1) continue;
    std::queue<int> q;
    q.push(t0);
    comp[t0] = ncomp;
    while (!q.empty()) {
      int t = q.front();
      q.pop();
      for (int i = 0; i < 3; ++i) {
        int u = ExactSurface::tri(skip(3 * t + i));
        if (comp[u] == -1) {
          comp[u] = ncomp;
          q.push(u);
        }
      }
    }
    ++ncomp;
  }

  std::vector<ExactSurface> out(ncomp);
  std::vector<int> new_slot(H, -1);
  for (int t = 0; t < F; ++t) {
    if (!keep[t]) continue;
    ExactSurface& o = out[comp[t]];
    for (int i = 0; i < 3; ++i) {
      new_slot[3 * t + i] = o.half_edges() + i;
    }
    o.edge.insert(o.edge.end(), {s.edge[3 * t], s.edge[3 * t + 1], s.edge[3 * t + 2]});
    o.opp.insert(o.opp.end(), {-1, -1, -1});
  }
  for (int h = 0; h < H; ++h) {
    if (new_slot[h] == -1) continue;
    out[comp[ExactSurface::tri(h)]].opp[new_slot[h]] = new_slot[skip(h)];
  }
  for (auto& o : out) {
    o.d = s.d;
    o.label = s.label;
    // a component may still hold flat slivers (three parallel nonzero
    // edges); flip them away before validating
    for (long guard = 0;; ++guard) {
      require(guard < 4L * o.half_edges() + 16, "UnsupportedStratum",
              "collapse leaves a cluster of flat triangles");
      int flat = -1;
      for (int t = 0; t < o.faces() && flat == -1; ++t)
        if (cross_sign(o.edge[3 * t], o.edge[3 * t + 1]) == 0) flat = t;
      if (flat == -1) break;
      int h = sliver_long_edge(o, flat);
      require(flip_is_valid(o, h), "UnsupportedStratum",
              "collapse leaves an unflippable flat triangle");
      flip_edge(o, h);
    }
    validate_mesh(o);
  }
  return out;
}

}  // namespace detail

/**
 * Deform a surface by moving one cone-point class by the full vector v
 * while every other vertex class stays put: each mesh edge running from
 * class a to class b changes linearly along the flow.  Whenever a triangle
 * flattens en route the mesh is retriangulated by an edge flip and the flow
 * continues.  If two cone points collide strictly before the end of the
 * flow the deformation leaves the moduli space and
 * CollisionBeyondBoundary is thrown; a collision exactly at the end
 * produces the degenerate limit, classified as either a single H(2)
 * surface (one connecting saddle connection shrank) or a wedge of two
 * tori touching at a point (the surface pinched apart).
 *
 * moving_class indexes the cone classes as ordered by cone_data.
 */
inline RelOutcome rel_translate(const ExactSurface& input, int moving_class,
                                const Vec2<QuadNum>& v, long max_events = 100000) {
  ExactSurface s = input;
  ConeData cd = cone_data(s);
  require(cd.points.size() >= 2, "UnsupportedStratum",
          "relative deformation needs at least two cone classes");
  require(moving_class >= 0 && moving_class < static_cast<int>(cd.points.size()),
          "DomainError", "no such cone class");

  const int H = s.half_edges();
  std::vector<char> moving(H, 0);  // does the origin of h move?
  for (int h = 0; h < H; ++h) moving[h] = (cd.class_of[h] == moving_class);

  auto coef = [&](int h) -> int { return moving[ExactSurface::next(h)] - moving[h]; };

  RelOutcome out;
  QuadNum lam(0);
  const QuadNum one(1);
  QuadNum last_arrival(0);         // the instant the mesh last flowed from
  ExactSurface snap = s;           // mesh exactly as it arrived at `lam`
  std::vector<char> snap_moving = moving;
  int rewinds = 0;

  auto flip_tracked = [&](int h) {
    const int h2 = s.opp[h];
    const int n = ExactSurface::next(h), p = ExactSurface::prev(h);
    const int n2 = ExactSurface::next(h2), p2 = ExactSurface::prev(h2);
    char mB = moving[n], mC = moving[p], mD = moving[p2];
    flip_edge_raw(s, h);
    moving[n] = mD;
    moving[p] = mC;
    moving[h2] = mD;
    moving[n2] = mB;
    moving[p2] = mC;
  };

  // rate of change of twice the area of triangle t along the flow; every
  // vertex velocity is an integer multiple of v, so areas are linear in
  // the flow parameter and this rate is constant between flips
  auto area_rate = [&](int t) -> QuadNum {
    const Vec2<QuadNum>&e0 = s.edge[3 * t], &e1 = s.edge[3 * t + 1];
    return QuadNum(coef(3 * t)) * cross(v, e1) + QuadNum(coef(3 * t + 1)) * cross(e0, v);
  };

  // would flipping h leave both rebuilt triangles positively oriented just
  // after the current instant?  Several triangles can flatten at the same
  // time, leaving the diamond around h entirely collinear; the flip is
  // still the right move exactly when both rebuilt areas grow along the
  // flow, which the (linear) area rates decide at first order.
  auto flip_grows = [&](int h) {
    const int h2 = s.opp[h];
    const int n = ExactSurface::next(h);
    const int n2 = ExactSurface::next(h2), p2 = ExactSurface::prev(h2);
    const Vec2<QuadNum> diag = (s.edge[h] + s.edge[n]) - s.edge[n2];  // C - D
    auto grows = [&](const Vec2<QuadNum>& e0, int c0, const Vec2<QuadNum>& e1, int c1) {
      int a0 = cross_sign(e0, e1);
      if (a0 != 0) return a0 > 0;
      return (QuadNum(c0) * cross(v, e1) + QuadNum(c1) * cross(e0, v)).sign() > 0;
    };
    return grows(s.edge[n2], coef(n2), diag, coef(h) + coef(n) - coef(n2)) &&
           grows(s.edge[p2], coef(p2), s.edge[n], coef(n));
  };

  for (;;) {
    // resolve everything that is degenerate at the current time
    for (;;) {
      bool edge_collapsed = false;
      for (int h = 0; h < H && !edge_collapsed; ++h)
        if (coef(h) != 0 && s.edge[h].is_zero()) edge_collapsed = true;
      if (edge_collapsed) {
        require(lam == one, "CollisionBeyondBoundary",
                "cone points collide at fraction " + lam.str() + " of the deformation");
        auto pieces = detail::collapse_and_split(s);
        out.degenerate = true;
        out.components = std::move(pieces);
        if (out.components.size() == 1) {
          Stratum st = stratum(out.components[0]);
          require(st.genus == 2 && st.multiples == std::vector<int>{3}, "UnsupportedStratum",
                  "single-component collapse did not land in H(2)");
          out.kind = "H2_surface";
        } else if (out.components.size() == 2) {
          for (const auto& c : out.components)
            require(stratum(c).genus == 1, "UnsupportedStratum",
                    "two-component collapse is not a pair of tori");
          out.kind = "two_tori_wedge";
        } else {
          fail("UnsupportedStratum", "collapse produced more than two components");
        }
        return out;
      }

      // a flat triangle whose area is already growing is left alone mid-flow
      // (the next time step opens it back up); a shrinking or stationary
      // one, or any flat triangle at the endpoint, must be flipped away
      int h = -1;
      bool blocked = false;
      for (int t = 0; t < s.faces() && h == -1; ++t) {
        if (cross_sign(s.edge[3 * t], s.edge[3 * t + 1]) != 0) continue;
        if (lam != one && area_rate(t).sign() > 0) continue;
        blocked = true;
        int cand = detail::sliver_long_edge(s, t);
        if (flip_grows(cand)) h = cand;
      }
      if (h == -1 && !blocked) break;
      if (h == -1) {
        // Several cone points crossed mesh edges at one instant and no
        // single diagonal regains area (two triangles forming a
        // parallelogram can invert through themselves).  The surface is
        // fine; the mesh just failed to anticipate the crossing.  Rewind
        // to the midpoint of the last event-free stretch, restore the
        // Delaunay property there — a Delaunay mesh close enough to the
        // crossing triangulates around it — and flow forward again; each
        // repeat halves the rewind.
        require(++rewinds <= 32 && last_arrival < lam, "Internal",
                "simultaneous flattenings blocked the retriangulation");
        const QuadNum eta = (lam - last_arrival) / QuadNum(2);
        s = snap;
        moving = snap_moving;
        for (int e = 0; e < H; ++e) {
          int c = coef(e);
          if (c != 0) s.edge[e] -= QuadNum(c) * eta * v;
        }
        lam -= eta;
        for (bool dirty = true; dirty;) {
          dirty = false;
          for (int e = 0; e < H; ++e) {
            if (e > s.opp[e] || incircle_sign(s, e) <= 0) continue;
            require(out.events < max_events, "NonTerminatingFlips",
                    "relative deformation exceeded its retriangulation budget");
            flip_tracked(e);
            ++out.events;
            dirty = true;
          }
        }
        for (int t = 0; t < s.faces(); ++t)
          require(cross_sign(s.edge[3 * t], s.edge[3 * t + 1]) > 0, "Internal",
                  "rewound mesh is not positively triangulated");
        continue;
      }
      require(out.events < max_events, "NonTerminatingFlips",
              "relative deformation exceeded its retriangulation budget");
      flip_tracked(h);
      ++out.events;
    }

    if (lam == one) {
      for (int t = 0; t < s.faces(); ++t)
        require(cross_sign(s.edge[3 * t], s.edge[3 * t + 1]) != 0, "UnsupportedStratum",
                "deformation ends on a collinear configuration");
      out.surface = std::move(s);
      return out;
    }

    // next flattening time: triangle areas are linear in the flow parameter
    QuadNum step = one - lam;
    for (int t = 0; t < s.faces(); ++t) {
      QuadNum a1 = area_rate(t);
      if (a1.sign() < 0) {
        QuadNum st = cross(s.edge[3 * t], s.edge[3 * t + 1]) / -a1;
        if (st < step) step = st;
      }
    }
    for (int h = 0; h < H; ++h) {
      int c = coef(h);
      if (c != 0) s.edge[h] += QuadNum(c) * step * v;
    }
    last_arrival = lam;
    lam += step;
    snap = s;
    snap_moving = moving;
  }
}

}  // namespace flatlab
