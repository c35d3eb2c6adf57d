#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "flatlab/cylinders.hpp"
#include "flatlab/errors.hpp"
#include "flatlab/geometry.hpp"
#include "flatlab/quadnum.hpp"
#include "flatlab/rel.hpp"
#include "flatlab/surface.hpp"

namespace flatlab {

/** An oriented straight segment between cone points, free of them inside. */
struct SaddleConnection {
  Vec2<QuadNum> holonomy;
  int from_class = -1, to_class = -1;
};

inline bool operator==(const SaddleConnection& a, const SaddleConnection& b) {
  return a.holonomy == b.holonomy && a.from_class == b.from_class &&
         a.to_class == b.to_class;
}

namespace detail {

// Angular interval, swept counterclockwise from lo to hi, of opening less
// than a half turn.  The hi side is always open; the lo side closes when a
// connection may still be recorded exactly along it.
struct SightCone {
  Vec2<QuadNum> lo, hi;
  bool lo_strict = false;

  bool contains(const Vec2<QuadNum>& r) const {
    if (parallel_same(r, lo)) return !lo_strict;
    if (parallel_same(r, hi)) return false;
    return cross_sign(lo, r) > 0 && cross_sign(r, hi) > 0;
  }
  bool empty() const { return cross_sign(lo, hi) <= 0; }
};

// Is some point of the segment [p, q] within distance bound of the origin?
inline bool segment_reaches(const Vec2<QuadNum>& p, const Vec2<QuadNum>& q,
                            const QuadNum& bound2) {
  const Vec2<QuadNum> e = q - p;
  if (dot_sign(p, e) >= 0) return dot(p, p) <= bound2;
  if (dot_sign(q, e) <= 0) return dot(q, q) <= bound2;
  const QuadNum ee = dot(e, e);
  return dot(p, p) * ee - dot(p, e) * dot(p, e) <= bound2 * ee;
}

struct SaddleSearch {
  const ExactSurface& s;
  const ConeData& cd;
  QuadNum bound2;
  long nodes_left;
  int from_class;
  std::vector<SaddleConnection>* out;

  // Explore the triangle entered through half-edge g, whose origin vertex
  // develops to position pa in the plane of the base cone point.  Rays of
  // the sight cone cross the portal edge g from the side we came from.
  void explore(int g, const Vec2<QuadNum>& pa, SightCone cone) {
    require(--nodes_left > 0, "BoundTooLarge",
            "development search exceeded its node budget");
    if (cone.empty()) return;
    const Vec2<QuadNum> pb = pa + s.edge[g];
    const Vec2<QuadNum> pd = pb + s.edge[ExactSurface::next(g)];
    require(!pd.is_zero(), "Internal",
            "development folded back onto the base cone point");
    const int right = s.opp[ExactSurface::next(g)];
    const int left = s.opp[ExactSurface::prev(g)];
    if (cone.contains(pd)) {
      if (dot(pd, pd) <= bound2)
        out->push_back({pd, from_class,
                        cd.class_of[ExactSurface::prev(g)]});
      // The apex splits the cone; nothing is visible exactly behind it.
      if (segment_reaches(pb, pd, bound2))
        explore(right, pd, {cone.lo, pd, cone.lo_strict});
      if (segment_reaches(pd, pa, bound2))
        explore(left, pa, {pd, cone.hi, true});
      return;
    }
    if (cross_sign(cone.lo, pd) <= 0) {
      // Apex at or below the cone: every visible ray crosses the upper edge.
      if (segment_reaches(pd, pa, bound2)) explore(left, pa, cone);
    } else {
      require(cross_sign(pd, cone.hi) <= 0, "Internal",
              "sight cone lost track of the apex");
      if (segment_reaches(pb, pd, bound2)) explore(right, pd, cone);
    }
  }
};

}  // namespace detail

/**
 * Lists every saddle connection of holonomy length at most `bound`, both
 * orientations of each, by developing chains of triangles into the plane
 * around every cone corner and pruning chains that leave the search disk.
 * The node budget caps the number of chains examined; exceeding it raises
 * BoundTooLarge.
 */
inline std::vector<SaddleConnection> enumerate_saddle_connections(
    const ExactSurface& s, const QuadNum& bound, long max_nodes = 1000000) {
  require(bound.sign() > 0, "DomainError",
          "enumeration needs a positive length bound");
  const ConeData cd = cone_data(s);
  std::vector<SaddleConnection> out;
  detail::SaddleSearch search{s, cd, bound * bound, max_nodes, 0, &out};
  for (size_t v = 0; v < cd.points.size(); ++v) {
    search.from_class = static_cast<int>(v);
    for (int h : cd.points[v].corners) {
      const Vec2<QuadNum>& e = s.edge[h];
      if (dot(e, e) <= search.bound2)
        out.push_back({e, static_cast<int>(v),
                       cd.class_of[ExactSurface::next(h)]});
      // Rays strictly inside the wedge cross the opposite edge; the wedge
      // boundaries themselves are handled at the corner (above) and at the
      // counterclockwise-next corner.
      const Vec2<QuadNum> apex = e + s.edge[ExactSurface::next(h)];
      if (detail::segment_reaches(e, apex, search.bound2))
        search.explore(s.opp[ExactSurface::next(h)], apex,
                       {e, -s.edge[ExactSurface::prev(h)], true});
    }
  }
  std::sort(out.begin(), out.end(),
            [](const SaddleConnection& a, const SaddleConnection& b) {
              return std::make_tuple(a.holonomy.x, a.holonomy.y, a.from_class,
                                     a.to_class) <
                     std::make_tuple(b.holonomy.x, b.holonomy.y, b.from_class,
                                     b.to_class);
            });
  return out;
}

/**
 * The interval of horizontal displacements of one cone class (the first in
 * cone_data order) within which no saddle connection between the two classes
 * collapses.  A missing endpoint means no bounding connection was found
 * within the enumeration bound.  Requires a surface with exactly two cone
 * classes.
 */
struct HorizontalInterval {
  std::optional<QuadNum> left, right;
  std::optional<SaddleConnection> left_witness, right_witness;
  QuadNum bound;
};

inline HorizontalInterval horizontal_interval(const ExactSurface& s,
                                              const QuadNum& bound,
                                              long max_nodes = 1000000) {
  const std::string name = stratum(s).name();
  require(name == "H(1,1)", "WrongStratum",
          "horizontal displacement intervals need a surface in H(1,1), got " +
              name);
  HorizontalInterval iv;
  iv.bound = bound;
  for (const SaddleConnection& c :
       enumerate_saddle_connections(s, bound, max_nodes)) {
    if (c.from_class != 0 || c.to_class != 1) continue;
    if (c.holonomy.y != QuadNum(0)) continue;
    const QuadNum& x = c.holonomy.x;
    if (x.sign() > 0 && (!iv.right || x < *iv.right)) {
      iv.right = x;
      iv.right_witness = c;
    }
    if (x.sign() < 0 && (!iv.left || x > *iv.left)) {
      iv.left = x;
      iv.left_witness = c;
    }
  }
  return iv;
}

/**
 * Membership in the horizontal-collision set: a surface belongs to it when
 * some finite horizontal displacement of one cone class collides the two
 * classes, and `s` is then the smallest such displacement magnitude.  When
 * no bounding connection exists up to the enumeration bound the surface is
 * reported as staying in the locus for all displacements checked.
 */
struct HcVerdict {
  bool bounded = false;  // true: in the collision set with threshold s
  QuadNum s;
  HorizontalInterval interval;
};

inline HcVerdict hc_membership(const ExactSurface& surf, const QuadNum& bound,
                               long max_nodes = 1000000) {
  HcVerdict v;
  v.interval = horizontal_interval(surf, bound, max_nodes);
  const auto mag = [](const QuadNum& x) { return x.sign() < 0 ? -x : x; };
  if (v.interval.left) v.s = mag(*v.interval.left);
  if (v.interval.right && (!v.interval.left || *v.interval.right < v.s))
    v.s = *v.interval.right;
  v.bounded = v.interval.left.has_value() || v.interval.right.has_value();
  return v;
}

/**
 * What the surface degenerates into when the moving cone class is translated
 * horizontally by exactly an endpoint of its displacement interval: either a
 * single surface with one higher-order cone point or two flat tori joined at
 * a point.  Displacements that are not endpoints raise NotOnBoundary.
 */
struct DegenerationReport {
  std::string kind;
  std::vector<ExactSurface> components;
  long events = 0;
};

inline DegenerationReport classify_degeneration(const ExactSurface& s,
                                                const QuadNum& x,
                                                long max_nodes = 1000000) {
  const auto mag = [](const QuadNum& q) { return q.sign() < 0 ? -q : q; };
  const HorizontalInterval iv =
      horizontal_interval(s, mag(x) + QuadNum(1), max_nodes);
  const bool at_left = iv.left && *iv.left == x;
  const bool at_right = iv.right && *iv.right == x;
  require(at_left || at_right, "NotOnBoundary",
          "displacement " + x.str() +
              " is not an endpoint of the collision-free interval");
  const RelOutcome res = rel_translate(s, 0, {x, QuadNum(0)});
  require(res.degenerate, "Internal",
          "an interval endpoint failed to collide the cone classes");
  DegenerationReport rep;
  rep.kind = res.kind;
  rep.components = res.components;
  rep.events = res.events;
  return rep;
}

/**
 * Decomposes the flow in every saddle-connection direction up to the length
 * bound.  Directions in which some separatrix fails to close within the
 * trace budget are reported rather than fatal.
 */
struct ProbeEntry {
  Vec2<QuadNum> direction;
  bool periodic = false;
  int cylinders = 0;
  std::string error;
};

struct ProbeReport {
  QuadNum bound;
  bool all_periodic = true;
  std::vector<ProbeEntry> entries;
};

inline ProbeReport periodicity_probe(const ExactSurface& s,
                                     const QuadNum& bound,
                                     long trace_budget = 100000,
                                     long max_nodes = 1000000) {
  ProbeReport rep;
  rep.bound = bound;
  std::vector<Vec2<QuadNum>> dirs;
  for (const SaddleConnection& c :
       enumerate_saddle_connections(s, bound, max_nodes)) {
    Vec2<QuadNum> d = primitive_direction(c.holonomy);
    if (d.y.sign() < 0 || (d.y.sign() == 0 && d.x.sign() < 0)) d = -d;
    if (std::find(dirs.begin(), dirs.end(), d) == dirs.end()) dirs.push_back(d);
  }
  for (const Vec2<QuadNum>& d : dirs) {
    ProbeEntry entry;
    entry.direction = d;
    try {
      const CylinderDecomposition dec =
          periodic_direction_decompose(s, d, trace_budget);
      entry.periodic = true;
      entry.cylinders = static_cast<int>(dec.cylinders.size());
    } catch (const Error& e) {
      if (e.code() != "TraceBudgetExceeded") throw;
      entry.error = e.code();
      rep.all_periodic = false;
    }
    rep.entries.push_back(std::move(entry));
  }
  return rep;
}

}  // namespace flatlab

