#pragma once

#include <algorithm>
#include <string>
#include <utility>
#include <vector>

#include "flatlab/errors.hpp"
#include "flatlab/geometry.hpp"
#include "flatlab/quadnum.hpp"
#include "flatlab/rational.hpp"
#include "flatlab/surface.hpp"

namespace flatlab {

namespace detail {

// Exact floor of a real quadratic number: estimate in floating point, then
// correct with exact comparisons until n <= x < n + 1.
inline mpz_class floor_exact(const QuadNum& x) {
  if (x.b() == 0) {
    mpz_class q;
    mpz_fdiv_q(q.get_mpz_t(), x.a().num().get_mpz_t(), x.a().den().get_mpz_t());
    return q;
  }
  mpz_class n(static_cast<double>(x.to_long_double()));
  while (QuadNum(Rational(n + 1, 1)) <= x) ++n;
  while (QuadNum(Rational(n, 1)) > x) --n;
  return n;
}

// Representative of x modulo w in [0, w), for w > 0.
inline QuadNum mod_positive(const QuadNum& x, const QuadNum& w) {
  mpz_class k = floor_exact(x / w);
  return x - QuadNum(Rational(k, 1)) * w;
}

// Half-open corner wedge [edge(h), -edge(prev h)): closed on the outgoing
// edge and open on the incoming side, so that around a vertex every
// direction lands in exactly one corner and a ray running along a mesh edge
// belongs to that edge's own slot.
inline bool wedge_takes(const ExactSurface& s, int h, const Vec2<QuadNum>& r) {
  const Vec2<QuadNum>& from = s.edge[h];
  const Vec2<QuadNum> to = -s.edge[ExactSurface::prev(h)];
  if (parallel_same(r, from)) return true;
  if (parallel_same(r, to)) return false;
  return cross_sign(from, r) > 0 && cross_sign(r, to) > 0;
}

// Position of the origin vertex of half-edge h in the frame of its triangle
// (slot-0 vertex at the origin).
inline Vec2<QuadNum> corner_position(const ExactSurface& s, int h) {
  const int t = h / 3;
  switch (h % 3) {
    case 0: return Vec2<QuadNum>{};
    case 1: return s.edge[3 * t];
    default: return s.edge[3 * t] + s.edge[3 * t + 1];
  }
}

// One straight segment of a flow line inside a single triangle, stored in
// that triangle's frame.  `at` is the distance (in multiples of the flow
// direction) of endpoint a from the start of the connection it belongs to,
// and b - a = span * direction.
struct FlowChord {
  int tri = -1;
  Vec2<QuadNum> a, b;
  QuadNum at, span;
};

// Outcome of pushing a straight ray across one triangle: either it reaches a
// vertex (`corner` is a slot whose origin is that vertex) or it crosses the
// interior of `edge_slot` at parameter r along that edge.
struct RayStep {
  QuadNum s;
  Vec2<QuadNum> hit;
  bool at_vertex = false;
  int corner = -1;
  int edge_slot = -1;
  QuadNum r;
};

inline RayStep advance_ray(const ExactSurface& s, int t, const Vec2<QuadNum>& p,
                           const Vec2<QuadNum>& dir) {
  const Vec2<QuadNum> P[3] = {Vec2<QuadNum>{}, s.edge[3 * t],
                              s.edge[3 * t] + s.edge[3 * t + 1]};
  RayStep best;
  bool found = false;
  for (int i = 0; i < 3; ++i) {
    const int h = 3 * t + i;
    const Vec2<QuadNum>& e = s.edge[h];
    if (cross_sign(dir, e) == 0) continue;
    const QuadNum den = cross(dir, e);
    const QuadNum step = cross(P[i] - p, e) / den;
    const QuadNum r = cross(dir, p - P[i]) / den;
    if (!(step > QuadNum(0))) continue;
    if (r < QuadNum(0) || r > QuadNum(1)) continue;
    if (found && step >= best.s) continue;
    best.s = step;
    best.hit = P[i] + r * e;
    best.at_vertex = (r == QuadNum(0) || r == QuadNum(1));
    best.corner = (r == QuadNum(0)) ? h : 3 * t + (i + 1) % 3;
    best.edge_slot = h;
    best.r = r;
    found = true;
  }
  require(found, "Internal", "straight ray failed to leave a triangle");
  return best;
}

// A maximal straight flow line from one cone corner to another, together
// with every triangle chord it sweeps out.
struct Separatrix {
  int from_corner = -1, to_corner = -1;
  QuadNum len;
  std::vector<FlowChord> chords;
};

inline Separatrix trace_separatrix(const ExactSurface& s, int start,
                                   const Vec2<QuadNum>& dir, long budget) {
  Separatrix out;
  out.from_corner = start;
  if (parallel_same(dir, s.edge[start])) {
    // The flow line is the mesh edge itself; record it on both sides so a
    // transverse probe can see it from either neighbouring triangle.
    const QuadNum len = dot(dir, s.edge[start]) / dot(dir, dir);
    const int back = s.opp[start];
    const Vec2<QuadNum> a = corner_position(s, start);
    const Vec2<QuadNum> c = corner_position(s, back);
    out.chords.push_back({start / 3, a, a + s.edge[start], QuadNum(0), len});
    out.chords.push_back({back / 3, c + s.edge[back], c, QuadNum(0), len});
    out.to_corner = back;
    out.len = len;
    return out;
  }
  int tri = start / 3;
  Vec2<QuadNum> p = corner_position(s, start);
  QuadNum acc(0);
  for (long n = 0; n < budget; ++n) {
    const RayStep st = advance_ray(s, tri, p, dir);
    out.chords.push_back({tri, p, st.hit, acc, st.s});
    acc += st.s;
    if (st.at_vertex) {
      require(wedge_takes(s, st.corner, -dir), "Internal",
              "arrival corner does not face the flow");
      out.to_corner = st.corner;
      out.len = acc;
      return out;
    }
    const int g = s.opp[st.edge_slot];
    p = corner_position(s, g) + (QuadNum(1) - st.r) * s.edge[g];
    tri = g / 3;
  }
  fail("TraceBudgetExceeded", "flow line did not close after " +
                                  std::to_string(budget) + " crossings");
}

}  // namespace detail

/**
 * Scales a nonzero direction by a positive rational so that its four
 * rational coordinates become coprime integers.  The result is a canonical
 * representative of the ray through v up to positive scaling; v and -v map
 * to opposite representatives.
 */
inline Vec2<QuadNum> primitive_direction(const Vec2<QuadNum>& v) {
  require(!(v.x == QuadNum(0) && v.y == QuadNum(0)), "DomainError",
          "the zero vector has no direction");
  const Rational parts[4] = {v.x.a(), v.x.b(), v.y.a(), v.y.b()};
  mpz_class lcm = 1, gcd = 0;
  for (const Rational& r : parts) {
    if (r.num() == 0) continue;
    mpz_class l;
    mpz_lcm(l.get_mpz_t(), lcm.get_mpz_t(), r.den().get_mpz_t());
    lcm = l;
  }
  for (const Rational& r : parts) {
    if (r.num() == 0) continue;
    const mpz_class scaled = r.num() * (lcm / r.den());
    gcd = ::gcd(gcd, scaled);
  }
  const QuadNum scale{Rational(lcm, ::abs(gcd))};
  return scale * v;
}

/** A point on a cylinder boundary circle where a connection begins. */
struct BoundaryMark {
  int connection = -1;
  QuadNum at;  // distance from the circle's anchor, in direction multiples
};

/** One boundary circle of a cylinder, developed from its anchor point. */
struct Circle {
  QuadNum len;
  std::vector<BoundaryMark> marks;
};

/**
 * A saddle connection parallel to the flow direction.  Lengths are measured
 * in multiples of the direction vector; `below` and `above` index the
 * cylinders the connection touches on each side.
 */
struct FlowConnection {
  int from_corner = -1, to_corner = -1;
  int from_class = -1, to_class = -1;
  QuadNum len;
  int below = -1, above = -1;
};

/**
 * A maximal flow-parallel annulus.  The circumference w is measured in
 * multiples of the direction vector and the height h in the transverse
 * coordinate cross(direction, .), a unimodular frame: summing w * h over all
 * cylinders recovers the surface area exactly in every direction.  The twist
 * t is the position, in [0, w), of the top circle's anchor above the bottom
 * circle's anchor.
 */
struct Cylinder {
  QuadNum w, h, t;
  Circle bottom, top;
};

struct CylinderDecomposition {
  Vec2<QuadNum> direction;
  std::vector<FlowConnection> connections;
  std::vector<Cylinder> cylinders;
};

/**
 * Decomposes the surface into parallel cylinders in the given direction by
 * tracing every separatrix until it closes up into a saddle connection and
 * sewing the resulting circles together.  Directions in which the flow is
 * not periodic make some separatrix wander forever; the trace budget cuts
 * such runs off with TraceBudgetExceeded.
 */
inline CylinderDecomposition periodic_direction_decompose(
    const ExactSurface& s, const Vec2<QuadNum>& direction,
    long trace_budget = 1000000) {
  const Vec2<QuadNum> dir = primitive_direction(direction);
  const Vec2<QuadNum> perp{-dir.y, dir.x};
  const ConeData cd = cone_data(s);

  // Classify corners by whether their wedge faces along or against the flow.
  // Around each cone point the two kinds alternate, once per full turn.
  const int H = static_cast<int>(s.half_edges());
  std::vector<int> sc_at(H, -1);                 // R corner -> connection id
  std::vector<std::pair<int, int>> prong_of(H, {-1, -1});
  std::vector<std::vector<std::pair<int, bool>>> prongs(cd.points.size());
  int n_sc = 0;
  for (size_t v = 0; v < cd.points.size(); ++v) {
    for (int h : cd.points[v].corners) {
      const bool fwd = detail::wedge_takes(s, h, dir);
      const bool bwd = detail::wedge_takes(s, h, -dir);
      require(!(fwd && bwd), "Internal", "corner wedge faces both ways");
      if (!fwd && !bwd) continue;
      prong_of[h] = {static_cast<int>(v), static_cast<int>(prongs[v].size())};
      prongs[v].push_back({h, fwd});
      if (fwd) sc_at[h] = n_sc++;
    }
    const size_t expect = 2 * static_cast<size_t>(cd.points[v].multiple);
    require(prongs[v].size() == expect, "Internal",
            "prong count does not match the cone angle");
    for (size_t k = 0; k < prongs[v].size(); ++k)
      require(prongs[v][k].second != prongs[v][(k + 1) % prongs[v].size()].second,
              "Internal", "flow prongs do not alternate around a cone point");
  }

  std::vector<detail::Separatrix> traces;
  traces.reserve(n_sc);
  std::vector<FlowConnection> conns(n_sc);
  for (size_t v = 0; v < cd.points.size(); ++v)
    for (auto [h, fwd] : prongs[v]) {
      if (!fwd) continue;
      detail::Separatrix tr = detail::trace_separatrix(s, h, dir, trace_budget);
      const int id = sc_at[h];
      conns[id].from_corner = h;
      conns[id].from_class = static_cast<int>(v);
      conns[id].to_corner = tr.to_corner;
      conns[id].to_class = cd.class_of[tr.to_corner];
      conns[id].len = tr.len;
      traces.push_back(std::move(tr));
    }

  // Successor along a boundary circle: where a connection runs into a cone
  // point, the circle continues from the neighbouring outgoing prong -- the
  // previous one in counterclockwise corner order for the circle seen from
  // above, the next one for the circle seen from below.
  const auto chain = [&](int id, int side) {
    const int c = conns[id].to_corner;
    const auto [v, k] = prong_of[c];
    require(v >= 0 && !prongs[v][k].second, "Internal",
            "connection ends on an outgoing prong");
    const int n = static_cast<int>(prongs[v].size());
    const auto& nb = prongs[v][(k + side + n) % n];
    require(nb.second, "Internal", "flow prongs do not alternate");
    return sc_at[nb.first];
  };

  // Decompose both successor maps into cycles: the cycles of the upper-side
  // map are the bottom circles of cylinders, those of the lower-side map the
  // top circles.  Record each connection's position along its two circles.
  std::vector<int> up_cycle(n_sc, -1), down_cycle(n_sc, -1);
  std::vector<QuadNum> up_pos(n_sc), down_pos(n_sc);
  std::vector<Circle> bottoms, tops;
  const auto build_cycles = [&](int side, std::vector<int>& cyc,
                                std::vector<QuadNum>& pos,
                                std::vector<Circle>& out) {
    for (int id = 0; id < n_sc; ++id) {
      if (cyc[id] >= 0) continue;
      Circle c;
      QuadNum x(0);
      int cur = id;
      do {
        cyc[cur] = static_cast<int>(out.size());
        pos[cur] = x;
        c.marks.push_back({cur, x});
        x += conns[cur].len;
        cur = chain(cur, side);
      } while (cur != id);
      c.len = x;
      out.push_back(std::move(c));
    }
  };
  build_cycles(-1, up_cycle, up_pos, bottoms);
  build_cycles(+1, down_cycle, down_pos, tops);
  require(bottoms.size() == tops.size(), "Internal",
          "boundary circles do not pair up");

  // Index recorded chords by triangle so a transverse probe can find the
  // first flow line above any starting point.
  std::vector<std::vector<std::pair<int, int>>> by_tri(s.half_edges() / 3);
  for (int id = 0; id < n_sc; ++id)
    for (size_t k = 0; k < traces[id].chords.size(); ++k)
      by_tri[traces[id].chords[k].tri].push_back({id, static_cast<int>(k)});

  // Shoot a ray transverse to the flow from a point of the bottom circle;
  // it leaves the cylinder through the first flow line it meets, which lies
  // on the matching top circle.  Fails when the ray runs into a cone point,
  // in which case the caller retries from a different offset.
  struct ProbeHit {
    int sc = -1;
    QuadNum offset, height;
  };
  const auto probe_up = [&](int tri, Vec2<QuadNum> p, ProbeHit* out) {
    QuadNum eta(0);
    for (long n = 0; n < trace_budget; ++n) {
      const detail::RayStep st = detail::advance_ray(s, tri, p, perp);
      bool hit = false;
      QuadNum hs, hoff;
      int hsc = -1;
      for (auto [id, k] : by_tri[tri]) {
        const detail::FlowChord& c = traces[id].chords[k];
        if (cross_sign(perp, c.b - c.a) == 0) continue;
        const QuadNum den = cross(perp, c.b - c.a);
        const QuadNum sig = cross(c.a - p, c.b - c.a) / den;
        const QuadNum rho = cross(perp, p - c.a) / den;
        if (!(sig > QuadNum(0)) || sig > st.s) continue;
        if (rho < QuadNum(0) || rho > QuadNum(1)) continue;
        if (hit && sig >= hs) continue;
        hit = true;
        hs = sig;
        hsc = id;
        hoff = c.at + rho * c.span;
      }
      if (hit && !(st.at_vertex && hs == st.s)) {
        out->sc = hsc;
        out->offset = hoff;
        out->height = (eta + hs) * dot(dir, dir);
        return true;
      }
      if (st.at_vertex) return false;
      eta += st.s;
      const int g = s.opp[st.edge_slot];
      p = detail::corner_position(s, g) + (QuadNum(1) - st.r) * s.edge[g];
      tri = g / 3;
    }
    fail("TraceBudgetExceeded", "transverse probe did not close after " +
                                    std::to_string(trace_budget) + " crossings");
  };

  CylinderDecomposition dec;
  dec.direction = dir;
  dec.connections = conns;
  std::vector<int> top_used(tops.size(), 0);
  for (size_t b = 0; b < bottoms.size(); ++b) {
    const Circle& bot = bottoms[b];
    // Launch the probe from dyadic offsets along the first connection of the
    // circle until it avoids every cone point.
    const int a0 = bot.marks[0].connection;
    ProbeHit hit;
    bool ok = false;
    for (long denom = 2; denom <= (1L << 20) && !ok; denom *= 2)
      for (long num = 1; num < denom && !ok; num += 2) {
        const QuadNum delta =
            QuadNum(Rational(num, denom)) * conns[a0].len;
        // Launch only from the strict interior of a chord: an offset that
        // hits a chord junction would start the probe on a mesh edge with
        // the ray pointing out of the chord's triangle.
        for (const detail::FlowChord& c : traces[a0].chords) {
          if (!(c.at < delta && delta < c.at + c.span)) continue;
          const Vec2<QuadNum> p = c.a + (delta - c.at) * dir;
          ok = probe_up(c.tri, p, &hit);
          break;
        }
        if (ok) hit.offset = detail::mod_positive(
                    down_pos[hit.sc] + hit.offset - delta, tops[down_cycle[hit.sc]].len);
      }
    require(ok, "Internal", "no transverse probe avoids the cone points");
    const int tcyc = down_cycle[hit.sc];
    require(top_used[tcyc]++ == 0, "Internal", "two cylinders share a top circle");
    require(tops[tcyc].len == bot.len, "Internal",
            "cylinder circles disagree about the circumference");
    Cylinder cyl;
    cyl.w = bot.len;
    cyl.h = hit.height;
    // hit.offset now holds the top-circle position directly under the
    // bottom anchor, i.e. how far the top anchor sits to the right of it.
    cyl.t = detail::mod_positive(-hit.offset, cyl.w);
    cyl.bottom = bot;
    cyl.top = tops[tcyc];
    for (const BoundaryMark& mk : bot.marks)
      dec.connections[mk.connection].above = static_cast<int>(dec.cylinders.size());
    for (const BoundaryMark& mk : tops[tcyc].marks)
      dec.connections[mk.connection].below = static_cast<int>(dec.cylinders.size());
    dec.cylinders.push_back(std::move(cyl));
  }

  QuadNum covered(0);
  for (const Cylinder& c : dec.cylinders) covered += c.w * c.h;
  require(covered == total_area(s), "Internal",
          "cylinder areas do not sum to the surface area");
  return dec;
}

/**
 * The parameter chart of a three-cylinder decomposition whose widths obey
 * w3 = w1 + w2: widths, heights and twists per cylinder together with the
 * combined quantities s_i = h_i + h3, tau_i = t_i + t3 and the total area
 * m = w1 s1 + w2 s2.  Twists are re-anchored at shared boundary points --
 * the connection of the wide cylinder's circles that it shares with the
 * first narrow one -- so the chart does not depend on how the surface was
 * meshed.
 */
struct NormalizedParams {
  QuadNum w1, w2, w3;
  QuadNum h1, h2, h3;
  QuadNum t1, t2, t3;
  QuadNum s1, s2;
  QuadNum tau1, tau2;
  QuadNum m;
};

inline NormalizedParams normalize_params(const CylinderDecomposition& dec) {
  require(dec.cylinders.size() == 3, "WrongCylinderCount",
          "expected a three-cylinder decomposition, found " +
              std::to_string(dec.cylinders.size()));
  int wide = -1;
  for (int k = 0; k < 3; ++k)
    if (dec.cylinders[k].w ==
        dec.cylinders[(k + 1) % 3].w + dec.cylinders[(k + 2) % 3].w)
      wide = k;
  require(wide >= 0, "NoSumRelation",
          "no cylinder is as wide as the other two combined");
  int i1 = (wide + 1) % 3, i2 = (wide + 2) % 3;
  const auto key = [&](int i) {
    return std::make_tuple(dec.cylinders[i].w, dec.cylinders[i].h,
                           dec.cylinders[i].t);
  };
  if (key(i2) < key(i1)) std::swap(i1, i2);

  NormalizedParams np;
  const Cylinder& c1 = dec.cylinders[i1];
  const Cylinder& c2 = dec.cylinders[i2];
  const Cylinder& c3 = dec.cylinders[wide];
  np.w1 = c1.w;
  np.w2 = c2.w;
  np.w3 = c3.w;
  np.h1 = c1.h;
  np.h2 = c2.h;
  np.h3 = c3.h;
  np.t1 = c1.t;
  np.t2 = c2.t;
  np.t3 = c3.t;

  // Re-anchor the wide cylinder's twist at the boundary it shares with the
  // first narrow cylinder, when that boundary is unambiguous.
  QuadNum shift_b, shift_t;
  int nb = 0, nt = 0;
  for (const BoundaryMark& mk : c3.bottom.marks)
    if (dec.connections[mk.connection].below == i1) {
      shift_b = mk.at;
      ++nb;
    }
  for (const BoundaryMark& mk : c3.top.marks)
    if (dec.connections[mk.connection].above == i1) {
      shift_t = mk.at;
      ++nt;
    }
  if (nb == 1 && nt == 1)
    np.t3 = detail::mod_positive(np.t3 - shift_b + shift_t, np.w3);

  np.s1 = np.h1 + np.h3;
  np.s2 = np.h2 + np.h3;
  np.tau1 = np.t1 + np.t3;
  np.tau2 = np.t2 + np.t3;
  np.m = np.w1 * np.s1 + np.w2 * np.s2;
  return np;
}

/**
 * Verdict of the eigenform-locus membership test.  On failure `equation`
 * names the offending constraint ("eq1" or "eq2") and `residual` is its
 * exact nonzero value.
 */
struct LmVerdict {
  bool member = false;
  QuadNum m;
  std::string equation;
  QuadNum residual;
};

/**
 * Tests whether a parameter chart satisfies the two eigenform equations:
 * w1 conj(s1) + w2 conj(s2) must vanish exactly, and the rational number
 * w1 conj(tau1) + w2 conj(tau2) must lie in the lattice of integer
 * combinations of the field norms of w1, w2, w3.  The lattice quotient on
 * the second equation absorbs the choice of twist representatives: adding a
 * full turn to any twist shifts it by exactly one norm.
 */
inline LmVerdict check_lm(const NormalizedParams& p) {
  LmVerdict v;
  v.m = p.m;
  const QuadNum eq1 = p.w1 * p.s1.conj() + p.w2 * p.s2.conj();
  if (eq1 != QuadNum(0)) {
    v.equation = "eq1";
    v.residual = eq1;
    return v;
  }
  const QuadNum eq2 = p.w1 * p.tau1.conj() + p.w2 * p.tau2.conj();
  if (eq2.b().num() != 0) {
    v.equation = "eq2";
    v.residual = eq2;
    return v;
  }
  const Rational norms[3] = {(p.w1 * p.w1.conj()).a(), (p.w2 * p.w2.conj()).a(),
                             (p.w3 * p.w3.conj()).a()};
  mpz_class den = eq2.a().den();
  for (const Rational& n : norms) {
    mpz_class l;
    mpz_lcm(l.get_mpz_t(), den.get_mpz_t(), n.den().get_mpz_t());
    den = l;
  }
  mpz_class g = 0;
  for (const Rational& n : norms) {
    const mpz_class scaled = n.num() * (den / n.den());
    g = ::gcd(g, scaled);
  }
  require(g != 0, "Internal", "degenerate width norms");
  mpz_class rem = eq2.a().num() * (den / eq2.a().den());
  mpz_fdiv_r(rem.get_mpz_t(), rem.get_mpz_t(), g.get_mpz_t());
  if (rem != 0) {
    v.equation = "eq2";
    v.residual = QuadNum(Rational(rem, den));
    return v;
  }
  v.member = true;
  return v;
}

}  // namespace flatlab

