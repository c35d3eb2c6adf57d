#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <numeric>
#include <queue>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "flatlab/errors.hpp"
#include "flatlab/geometry.hpp"
#include "flatlab/serialize.hpp"

namespace flatlab {

/**
 * A translation surface, stored as a triangulated half-edge mesh.
 *
 * Triangle t owns half-edges 3t, 3t+1, 3t+2 in counterclockwise order;
 * edge[h] is the displacement along half-edge h, so the three vectors of a
 * triangle sum to zero and every triangle has positive doubled area
 * cross(edge[3t], edge[3t+1]).  opp is a fixed-point-free involution gluing
 * half-edges by translation: edge[opp[h]] == -edge[h].  Because all gluing
 * maps are translations, edge vectors alone determine the surface; vertex
 * positions are never stored.
 *
 * Surfaces built from polygon presentations are triangulated on build, and
 * every operation (flips, shears, deformations) acts on the mesh directly.
 * Serialization writes the triangles back out as a polygon presentation.
 */
template <class K>
struct Surface {
  std::vector<Vec2<K>> edge;  // size 3F
  std::vector<int> opp;       // size 3F
  long d = 0;                 // shared quadratic discriminant (exact kernel), 0 = rational
  std::string label;

  int faces() const { return static_cast<int>(edge.size()) / 3; }
  int half_edges() const { return static_cast<int>(edge.size()); }

  static int tri(int h) { return h / 3; }
  static int next(int h) { return h - h % 3 + (h + 1) % 3; }
  static int prev(int h) { return h - h % 3 + (h + 2) % 3; }

  // next outgoing half-edge counterclockwise around the origin vertex of h
  int next_at_vertex(int h) const { return opp[prev(h)]; }
};

using ExactSurface = Surface<QuadNum>;
using NumericSurface = Surface<double>;

template <class K>
using Polygon = std::vector<Vec2<K>>;

// one gluing entry: edge e1 of polygon p1 is identified with edge e2 of p2
struct GluePair {
  int p1, e1, p2, e2;
};

namespace detail {

template <class K>
bool point_on_open_segment(const Vec2<K>& p, const Vec2<K>& a, const Vec2<K>& b) {
  if (cross_sign(b - a, p - a) != 0) return false;
  return dot_sign(p - a, b - a) > 0 && dot_sign(p - b, a - b) > 0;
}

template <class K>
bool point_strictly_inside(const Vec2<K>& p, const Vec2<K>& a, const Vec2<K>& b,
                           const Vec2<K>& c) {
  return cross_sign(b - a, p - a) > 0 && cross_sign(c - b, p - b) > 0 &&
         cross_sign(a - c, p - c) > 0;
}

template <class K>
bool point_on_closed_segment(const Vec2<K>& p, const Vec2<K>& a, const Vec2<K>& b) {
  if (cross_sign(b - a, p - a) != 0) return false;
  return dot_sign(p - a, b - a) >= 0 && dot_sign(p - b, a - b) >= 0;
}

// do closed segments [a1,a2] and [b1,b2] share any point?
template <class K>
bool closed_segments_intersect(const Vec2<K>& a1, const Vec2<K>& a2, const Vec2<K>& b1,
                               const Vec2<K>& b2) {
  int o1 = cross_sign(a2 - a1, b1 - a1);
  int o2 = cross_sign(a2 - a1, b2 - a1);
  int o3 = cross_sign(b2 - b1, a1 - b1);
  int o4 = cross_sign(b2 - b1, a2 - b1);
  if (o1 * o2 < 0 && o3 * o4 < 0) return true;
  if (o1 == 0 && point_on_closed_segment(b1, a1, a2)) return true;
  if (o2 == 0 && point_on_closed_segment(b2, a1, a2)) return true;
  if (o3 == 0 && point_on_closed_segment(a1, b1, b2)) return true;
  if (o4 == 0 && point_on_closed_segment(a2, b1, b2)) return true;
  return false;
}

/**
 * Validate one polygon (closed, positively oriented, simple, no zero edges
 * or zero-angle corners) and triangulate it by ear clipping.  Returns the
 * triangles as index triples into the polygon's vertex list; vertex i sits
 * at the partial sum of edges 0..i-1.
 */
template <class K>
std::vector<std::array<int, 3>> triangulate_polygon(const Polygon<K>& poly, int poly_index) {
  const int n = static_cast<int>(poly.size());
  require(n >= 3, "InvalidPolygon",
          "polygon " + std::to_string(poly_index) + " has fewer than 3 edges");

  std::vector<Vec2<K>> pos(n);
  Vec2<K> acc{};
  K msum{};
  for (int i = 0; i < n; ++i) {
    require(!poly[i].is_zero(), "InvalidPolygon",
            "polygon " + std::to_string(poly_index) + " has a zero edge");
    pos[i] = acc;
    acc += poly[i];
    msum += mag1(poly[i]);
  }
  require(kernel_traits<K>::sign(acc.x, msum) == 0 && kernel_traits<K>::sign(acc.y, msum) == 0,
          "InvalidPolygon", "polygon " + std::to_string(poly_index) + " does not close up");

  K doubled_area{};
  for (int i = 0; i < n; ++i) doubled_area += cross(pos[i], pos[(i + 1) % n]);
  require(kernel_traits<K>::sign(doubled_area, doubled_area) > 0, "NonPositiveArea",
          "polygon " + std::to_string(poly_index) +
              " is not positively oriented or has zero area");

  for (int i = 0; i < n; ++i) {
    const Vec2<K>& e0 = poly[i];
    const Vec2<K>& e1 = poly[(i + 1) % n];
    require(cross_sign(e0, e1) != 0 || dot_sign(e0, e1) > 0, "InvalidPolygon",
            "polygon " + std::to_string(poly_index) + " doubles back on itself at corner " +
                std::to_string((i + 1) % n));
  }

  // simplicity: no two non-adjacent boundary edges may touch
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (j == i + 1 || (i == 0 && j == n - 1)) continue;
      if (closed_segments_intersect(pos[i], pos[(i + 1) % n], pos[j], pos[(j + 1) % n]))
        fail("InvalidPolygon", "polygon " + std::to_string(poly_index) +
                                   " self-intersects (edges " + std::to_string(i) + " and " +
                                   std::to_string(j) + ")");
    }
  }

  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::vector<std::array<int, 3>> tris;

  while (idx.size() > 3) {
    const int m = static_cast<int>(idx.size());
    bool clipped = false;
    for (int k = 0; k < m; ++k) {
      int ia = idx[(k + m - 1) % m], ib = idx[k], ic = idx[(k + 1) % m];
      const Vec2<K>&a = pos[ia], &b = pos[ib], &c = pos[ic];
      if (cross_sign(b - a, c - b) <= 0) continue;  // reflex or flat corner
      bool blocked = false;
      for (int v : idx) {
        if (v == ia || v == ib || v == ic) continue;
        if (point_strictly_inside(pos[v], a, b, c) || point_on_open_segment(pos[v], a, c)) {
          blocked = true;
          break;
        }
      }
      if (blocked) continue;
      tris.push_back({ia, ib, ic});
      idx.erase(idx.begin() + k);
      clipped = true;
      break;
    }
    require(clipped, "InvalidPolygon",
            "polygon " + std::to_string(poly_index) + " could not be triangulated");
  }
  require(cross_sign(pos[idx[1]] - pos[idx[0]], pos[idx[2]] - pos[idx[1]]) > 0,
          "InvalidPolygon",
          "polygon " + std::to_string(poly_index) + " degenerates under triangulation");
  tris.push_back({idx[0], idx[1], idx[2]});
  return tris;
}

}  // namespace detail

/**
 * Check the mesh invariants: array sizes, triangle closure, positive
 * triangle areas, gluing involution with negated edge vectors, and
 * connectivity.  Throws on the first violation.
 */
template <class K>
void validate_mesh(const Surface<K>& s) {
  const int H = s.half_edges();
  require(H > 0 && H % 3 == 0 && static_cast<int>(s.opp.size()) == H, "InvalidGluing",
          "mesh arrays malformed");
  for (int t = 0; t < s.faces(); ++t) {
    Vec2<K> sum = s.edge[3 * t] + s.edge[3 * t + 1] + s.edge[3 * t + 2];
    K sc = mag1(s.edge[3 * t]);
    require(kernel_traits<K>::sign(sum.x, sc) == 0 && kernel_traits<K>::sign(sum.y, sc) == 0,
            "InvalidPolygon", "triangle " + std::to_string(t) + " does not close up");
    require(cross_sign(s.edge[3 * t], s.edge[3 * t + 1]) > 0, "NonPositiveArea",
            "triangle " + std::to_string(t) + " has non-positive area");
  }
  for (int h = 0; h < H; ++h) {
    int o = s.opp[h];
    require(o >= 0 && o < H && o != h, "InvalidGluing",
            "half-edge " + std::to_string(h) + " has no valid partner");
    require(s.opp[o] == h, "InvalidGluing", "gluing is not an involution");
    Vec2<K> sum = s.edge[h] + s.edge[o];
    require(kernel_traits<K>::sign(sum.x, mag1(s.edge[h])) == 0 &&
                kernel_traits<K>::sign(sum.y, mag1(s.edge[h])) == 0,
            "EdgeMismatch", "glued half-edges " + std::to_string(h) + " and " +
                                std::to_string(o) + " are not opposite vectors");
  }
  std::vector<char> seen(s.faces(), 0);
  std::queue<int> q;
  q.push(0);
  seen[0] = 1;
  int count = 1;
  while (!q.empty()) {
    int t = q.front();
    q.pop();
    for (int i = 0; i < 3; ++i) {
      int u = Surface<K>::tri(s.opp[3 * t + i]);
      if (!seen[u]) {
        seen[u] = 1;
        ++count;
        q.push(u);
      }
    }
  }
  require(count == s.faces(), "InvalidGluing", "surface is not connected");
}

/**
 * Build a surface from a polygon presentation.  Each polygon is a closed
 * positively-oriented simple loop of edge vectors; the gluing identifies
 * boundary edges in pairs, and glued edges must be opposite vectors (the
 * identification is a translation).  Polygons are triangulated on build.
 *
 * d declares the quadratic field of the coordinates; pass -1 to infer it.
 */
template <class K>
Surface<K> build_surface(const std::vector<Polygon<K>>& polygons,
                         const std::vector<GluePair>& gluing, long d = -1,
                         std::string label = "") {
  require(!polygons.empty(), "InvalidPolygon", "no polygons given");

  if constexpr (kernel_traits<K>::exact) {
    long merged = 0;
    auto merge = [&](long dv) {
      if (dv == 0) return;
      if (merged == 0) merged = dv;
      require(merged == dv, "MixedField",
              "coordinates mix sqrt(" + std::to_string(merged) + ") with sqrt(" +
                  std::to_string(dv) + ")");
    };
    for (const auto& poly : polygons)
      for (const auto& v : poly) {
        merge(v.x.d());
        merge(v.y.d());
      }
    if (d == -1) d = merged;
    require(d == merged || merged == 0, "MixedField",
            "coordinates live in a different field than declared");
    require(d == 0 || is_squarefree(d), "ParseError", "d must be 0 or squarefree >= 2");
  } else {
    d = 0;
  }

  Surface<K> s;
  s.d = d;
  s.label = std::move(label);

  // triangulate polygons; record which mesh half-edge carries each boundary
  // edge, and pair up internal diagonals as we go
  std::vector<std::vector<int>> boundary_he(polygons.size());
  std::map<std::pair<long, long>, int> open_diagonal;  // (poly*N+i, poly*N+j) -> half-edge
  for (size_t p = 0; p < polygons.size(); ++p) {
    const auto& poly = polygons[p];
    const int n = static_cast<int>(poly.size());
    boundary_he[p].assign(n, -1);
    std::vector<Vec2<K>> pos(n);
    Vec2<K> acc{};
    for (int i = 0; i < n; ++i) {
      pos[i] = acc;
      acc += poly[i];
    }
    auto tris = detail::triangulate_polygon(poly, static_cast<int>(p));
    for (const auto& tr : tris) {
      int base = s.half_edges();
      s.edge.push_back(pos[tr[1]] - pos[tr[0]]);
      s.edge.push_back(pos[tr[2]] - pos[tr[1]]);
      s.edge.push_back(pos[tr[0]] - pos[tr[2]]);
      s.opp.insert(s.opp.end(), {-1, -1, -1});
      for (int i = 0; i < 3; ++i) {
        int a = tr[i], b = tr[(i + 1) % 3];
        if (b == (a + 1) % n) {
          boundary_he[p][a] = base + i;
        } else {
          auto key = std::make_pair(static_cast<long>(p) * n + std::min(a, b),
                                    static_cast<long>(p) * n + std::max(a, b));
          auto it = open_diagonal.find(key);
          if (it == open_diagonal.end()) {
            open_diagonal.emplace(key, base + i);
          } else {
            s.opp[base + i] = it->second;
            s.opp[it->second] = base + i;
            open_diagonal.erase(it);
          }
        }
      }
    }
  }
  require(open_diagonal.empty(), "Internal", "triangulation left unmatched diagonals");

  auto slot = [&](int p, int e, const char* side) -> int {
    require(p >= 0 && p < static_cast<int>(polygons.size()) && e >= 0 &&
                e < static_cast<int>(polygons[p].size()),
            "InvalidGluing",
            std::string(side) + " of a gluing entry names a nonexistent edge");
    return boundary_he[p][e];
  };
  for (const auto& g : gluing) {
    int h1 = slot(g.p1, g.e1, "left side");
    int h2 = slot(g.p2, g.e2, "right side");
    require(h1 != h2, "InvalidGluing", "an edge cannot be glued to itself");
    require(s.opp[h1] == -1 && s.opp[h2] == -1, "InvalidGluing",
            "an edge appears twice in the gluing");
    s.opp[h1] = h2;
    s.opp[h2] = h1;
  }
  for (size_t p = 0; p < polygons.size(); ++p)
    for (size_t e = 0; e < polygons[p].size(); ++e)
      require(s.opp[boundary_he[p][e]] != -1, "InvalidGluing",
              "edge " + std::to_string(e) + " of polygon " + std::to_string(p) +
                  " is not glued");

  validate_mesh(s);
  return s;
}

/**
 * Cone-point data.  Vertices of the mesh are grouped into classes by walking
 * outgoing half-edges counterclockwise around each vertex; the total angle
 * of a class is 2*pi*multiple, computed exactly by counting how many times
 * the walk's direction sweeps past its starting direction (each corner
 * wedge is convex, and the count uses a half-open convention so every full
 * turn is counted exactly once).
 */
struct ConePoint {
  int multiple = 0;            // total angle = 2*pi*multiple
  std::vector<int> corners;    // outgoing half-edges, in counterclockwise walk order
  int order() const { return multiple - 1; }
};

struct ConeData {
  std::vector<ConePoint> points;
  std::vector<int> class_of;  // half-edge -> index into points (by origin vertex)
};

template <class K>
ConeData cone_data(const Surface<K>& s) {
  const int H = s.half_edges();
  ConeData cd;
  cd.class_of.assign(H, -1);
  for (int h0 = 0; h0 < H; ++h0) {
    if (cd.class_of[h0] != -1) continue;
    ConePoint pt;
    int h = h0;
    do {
      cd.class_of[h] = static_cast<int>(cd.points.size());
      pt.corners.push_back(h);
      h = s.next_at_vertex(h);
    } while (h != h0);

    const Vec2<K>& ray = s.edge[h0];
    int crossings = 0;
    const int m = static_cast<int>(pt.corners.size());
    for (int k = 0; k < m; ++k) {
      const Vec2<K>& u = s.edge[pt.corners[k]];
      const Vec2<K>& v = s.edge[pt.corners[(k + 1) % m]];
      require(cross_sign(u, v) > 0, "Internal", "corner wedge is not convex");
      if (ccw_cone_contains(u, v, ray)) ++crossings;
    }
    require(crossings >= 1, "Internal", "cone angle came out as zero");
    pt.multiple = crossings;
    cd.points.push_back(std::move(pt));
  }

  // deterministic order: big cones first, ties by smallest corner id
  std::vector<int> perm(cd.points.size());
  std::iota(perm.begin(), perm.end(), 0);
  auto key = [&](int i) {
    return std::make_pair(-cd.points[i].multiple,
                          *std::min_element(cd.points[i].corners.begin(),
                                            cd.points[i].corners.end()));
  };
  std::sort(perm.begin(), perm.end(), [&](int a, int b) { return key(a) < key(b); });
  std::vector<int> rank(perm.size());
  for (size_t i = 0; i < perm.size(); ++i) rank[perm[i]] = static_cast<int>(i);
  std::vector<ConePoint> sorted;
  sorted.reserve(cd.points.size());
  for (int i : perm) sorted.push_back(std::move(cd.points[i]));
  cd.points = std::move(sorted);
  for (int& c : cd.class_of) c = rank[c];
  return cd;
}

/**
 * The stratum of a surface: its genus together with the cone angle
 * multiples (descending, marked regular points included as 1).  The name
 * lists cone orders, e.g. H(2), H(1,1), H(0) for a marked torus.
 */
struct Stratum {
  int genus = 0;
  std::vector<int> multiples;  // angle multiples, descending

  std::string name() const {
    std::string out = "H(";
    for (size_t i = 0; i < multiples.size(); ++i) {
      if (i) out += ",";
      out += std::to_string(multiples[i] - 1);
    }
    return out + ")";
  }
  friend bool operator==(const Stratum& a, const Stratum& b) {
    return a.genus == b.genus && a.multiples == b.multiples;
  }
};

template <class K>
Stratum stratum(const Surface<K>& s) {
  ConeData cd = cone_data(s);
  Stratum st;
  int excess = 0;  // sum of (multiple - 1) = 2g - 2
  for (const auto& p : cd.points) {
    st.multiples.push_back(p.multiple);
    excess += p.multiple - 1;
  }
  require(excess % 2 == 0, "Internal", "angle excess is odd");
  st.genus = excess / 2 + 1;

  // cross-check with the Euler characteristic of the cell structure
  int V = static_cast<int>(cd.points.size());
  int F = s.faces();
  int E = 3 * F / 2;
  require(V - E + F == 2 - 2 * st.genus, "Internal",
          "angle count disagrees with the Euler characteristic");
  return st;
}

template <class K>
K total_area(const Surface<K>& s) {
  K a{};
  for (int t = 0; t < s.faces(); ++t) a += cross(s.edge[3 * t], s.edge[3 * t + 1]);
  return a / K(2);
}

/**
 * Apply a matrix of determinant one to every edge vector.  The gluing is
 * untouched: the linear action commutes with translations.
 */
template <class K>
Surface<K> apply_sl2(const Surface<K>& s, const Mat2<K>& m) {
  if constexpr (kernel_traits<K>::exact) {
    require(m.det() == K(1), "NotUnimodular", "matrix determinant is not 1");
  } else {
    require(std::abs(m.det() - 1.0) <= 1e-12, "NotUnimodular",
            "matrix determinant is not 1");
  }
  Surface<K> out = s;
  for (auto& e : out.edge) e = m * e;
  return out;
}

namespace detail {

template <class K>
using MeshSignature = std::vector<std::tuple<int, int, K, K>>;

/**
 * Breadth-first relabeling signature rooted at half-edge h0.  Triangles are
 * numbered in discovery order; each triangle is entered through a fixed
 * half-edge and its slots are read in rotation order from there.  The
 * signature lists, per slot, the partner triangle's number, the partner's
 * rotation index, and the edge vector, which pins the mesh up to relabeling.
 */
template <class K>
MeshSignature<K> label_signature(const Surface<K>& s, int h0, std::vector<int>* entry_out) {
  const int F = s.faces();
  std::vector<int> order(F, -1);   // old triangle -> new index
  std::vector<int> entry(F, -1);   // new index -> entry half-edge (old id)
  order[Surface<K>::tri(h0)] = 0;
  entry[0] = h0;
  int found = 1;
  for (int i = 0; i < found; ++i) {
    int h = entry[i];
    for (int r = 0; r < 3; ++r, h = Surface<K>::next(h)) {
      int pt = Surface<K>::tri(s.opp[h]);
      if (order[pt] == -1) {
        order[pt] = found;
        entry[found] = s.opp[h];
        ++found;
      }
    }
  }

  MeshSignature<K> sig;
  sig.reserve(3 * F);
  for (int i = 0; i < F; ++i) {
    int h = entry[i];
    for (int r = 0; r < 3; ++r, h = Surface<K>::next(h)) {
      int p = s.opp[h];
      int rot = (p - entry[order[Surface<K>::tri(p)]] + 3) % 3;
      sig.emplace_back(order[Surface<K>::tri(p)], rot, s.edge[h].x, s.edge[h].y);
    }
  }
  if (entry_out) *entry_out = entry;
  return sig;
}

}  // namespace detail

/**
 * Relabel triangles and half-edges canonically: among all breadth-first
 * relabelings (one per choice of root half-edge), keep the one whose
 * signature is lexicographically smallest.  Two meshes differing only by
 * labeling become identical, so == on the result is surface equality for
 * meshes with the same geometry and triangulation.
 */
template <class K>
Surface<K> canonical_label(const Surface<K>& s) {
  const int H = s.half_edges();
  detail::MeshSignature<K> best;
  std::vector<int> best_entry;
  for (int h0 = 0; h0 < H; ++h0) {
    std::vector<int> entry;
    auto sig = detail::label_signature(s, h0, &entry);
    if (best.empty() || sig < best) {
      best = std::move(sig);
      best_entry = std::move(entry);
    }
  }

  const int F = s.faces();
  std::vector<int> new_slot(H, -1);  // old half-edge -> new half-edge
  for (int i = 0; i < F; ++i) {
    int h = best_entry[i];
    for (int r = 0; r < 3; ++r) {
      new_slot[h] = 3 * i + r;
      h = Surface<K>::next(h);
    }
  }
  Surface<K> out;
  out.d = s.d;
  out.label = s.label;
  out.edge.resize(H);
  out.opp.resize(H);
  for (int h = 0; h < H; ++h) {
    out.edge[new_slot[h]] = s.edge[h];
    out.opp[new_slot[h]] = new_slot[s.opp[h]];
  }
  return out;
}

// exact structural equality of meshes (labels are not compared)
template <class K>
bool mesh_equal(const Surface<K>& a, const Surface<K>& b) {
  return a.d == b.d && a.edge == b.edge && a.opp == b.opp;
}

// ---------------------------------------------------------------------------
// serialization
//
// Exact coordinates are written as [a, b] meaning a + b*sqrt(d) with the
// discriminant d stored once at top level; a and b are [num, den] pairs.
// Inexact coordinates are plain JSON numbers and the file says so.
// ---------------------------------------------------------------------------

inline json coord_to_json(const QuadNum& q) { return json::array({to_json(q.a()), to_json(q.b())}); }
inline json coord_to_json(double x) { return x; }

inline QuadNum coord_from_json_exact(const json& j, long d) {
  require(j.is_array() && j.size() == 2, "ParseError",
          "exact coordinate must be [a, b]: " + j.dump());
  Rational a = rational_from_json(j[0]);
  Rational b = rational_from_json(j[1]);
  return QuadNum(a, b, b.is_zero() ? 0 : d);
}

inline double coord_from_json_inexact(const json& j) {
  require(j.is_number(), "ParseError", "inexact coordinate must be a number: " + j.dump());
  return j.get<double>();
}

template <class K>
json surface_to_json(const Surface<K>& s) {
  json polys = json::array();
  for (int t = 0; t < s.faces(); ++t) {
    json poly = json::array();
    for (int i = 0; i < 3; ++i) {
      const auto& e = s.edge[3 * t + i];
      poly.push_back(json::array({coord_to_json(e.x), coord_to_json(e.y)}));
    }
    polys.push_back(std::move(poly));
  }
  json glue = json::array();
  for (int h = 0; h < s.half_edges(); ++h) {
    int o = s.opp[h];
    if (h < o)
      glue.push_back(json::array(
          {Surface<K>::tri(h), h % 3, Surface<K>::tri(o), o % 3}));
  }
  return json{{"format", "flatlab.surface/1"},
              {"coords", kernel_traits<K>::exact ? "exact" : "inexact"},
              {"d", s.d},
              {"label", s.label},
              {"polygons", std::move(polys)},
              {"gluing", std::move(glue)}};
}

template <class K>
Surface<K> surface_from_json(const json& j) {
  require(j.is_object(), "ParseError", "surface document must be an object");
  require(j.value("format", "") == std::string("flatlab.surface/1"), "ParseError",
          "unrecognized surface format");
  std::string coords = j.value("coords", "exact");
  if constexpr (kernel_traits<K>::exact) {
    require(coords == "exact", "ParseError", "expected exact coordinates");
  } else {
    require(coords == "inexact", "ParseError", "expected inexact coordinates");
  }
  require(j.contains("d") && j["d"].is_number_integer(), "ParseError",
          "missing integer field d");
  long d = j["d"].get<long>();
  require(d == 0 || is_squarefree(d), "ParseError", "d must be 0 or squarefree >= 2");
  require(j.contains("polygons") && j["polygons"].is_array() && !j["polygons"].empty(),
          "ParseError", "missing polygons");
  require(j.contains("gluing") && j["gluing"].is_array(), "ParseError", "missing gluing");

  std::vector<Polygon<K>> polys;
  for (const auto& jp : j["polygons"]) {
    require(jp.is_array() && jp.size() >= 3, "ParseError", "polygon must list >= 3 edges");
    Polygon<K> poly;
    for (const auto& je : jp) {
      require(je.is_array() && je.size() == 2, "ParseError", "edge must be [x, y]");
      if constexpr (kernel_traits<K>::exact) {
        poly.emplace_back(coord_from_json_exact(je[0], d), coord_from_json_exact(je[1], d));
      } else {
        poly.emplace_back(coord_from_json_inexact(je[0]), coord_from_json_inexact(je[1]));
      }
    }
    polys.push_back(std::move(poly));
  }
  std::vector<GluePair> glue;
  for (const auto& jg : j["gluing"]) {
    require(jg.is_array() && jg.size() == 4, "ParseError",
            "gluing entry must be [p, e, q, f]");
    glue.push_back({jg[0].get<int>(), jg[1].get<int>(), jg[2].get<int>(), jg[3].get<int>()});
  }
  return build_surface<K>(polys, glue, kernel_traits<K>::exact ? d : 0,
                          j.value("label", ""));
}

}  // namespace flatlab
