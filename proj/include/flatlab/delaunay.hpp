#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <vector>

#include "flatlab/surface.hpp"

namespace flatlab {

/**
 * Sign of the incircle test across half-edge h: develop the two triangles
 * adjacent to h into the plane as a diamond A, B, C (triangle of h) and D
 * (apex across h); positive means D lies strictly inside the circumcircle
 * of ABC, zero means the four points are cocircular.
 */
template <class K>
int incircle_sign(const Surface<K>& s, int h) {
  int h2 = s.opp[h];
  // A = 0, B = A + edge[h], C = B + edge[next h], D = A + edge[next h2]
  Vec2<K> a{};
  Vec2<K> b = s.edge[h];
  Vec2<K> c = b + s.edge[Surface<K>::next(h)];
  Vec2<K> d = s.edge[Surface<K>::next(h2)];

  Vec2<K> u = a - d, v = b - d, w = c - d;
  K det = (u.x * u.x + u.y * u.y) * cross(v, w) - (v.x * v.x + v.y * v.y) * cross(u, w) +
          (w.x * w.x + w.y * w.y) * cross(u, v);
  K m = mag1(u) + mag1(v) + mag1(w);
  return kernel_traits<K>::sign(det, m * m * m * m);
}

template <class K>
bool locally_delaunay(const Surface<K>& s, int h) {
  return incircle_sign(s, h) <= 0;
}

/**
 * Flip the edge at half-edge h: replace the diagonal of the developed
 * diamond A-B (C above, D below) by C-D, rebuilding the two triangles and
 * their gluing in place.  Performs no orientation check of its own; the
 * caller must know the flip is geometrically meaningful.  (A deformation
 * may flip through an instant where the whole diamond is collinear, so
 * checking strict positivity here would be too strong.)
 */
template <class K>
void flip_edge_raw(Surface<K>& s, int h) {
  const int h2 = s.opp[h];
  const int n = Surface<K>::next(h), p = Surface<K>::prev(h);
  const int n2 = Surface<K>::next(h2), p2 = Surface<K>::prev(h2);

  struct Side {
    Vec2<K> vec;
    int partner;
  };
  Side ad{s.edge[n2], s.opp[n2]}, db{s.edge[p2], s.opp[p2]};
  Side bc{s.edge[n], s.opp[n]}, ca{s.edge[p], s.opp[p]};
  Vec2<K> diag = (s.edge[h] + s.edge[n]) - s.edge[n2];  // C - D

  // old slot -> new slot of the geometric edge it used to carry
  auto remap = [&](int q) {
    if (q == n2) return h;
    if (q == p2) return h2;
    if (q == n) return n2;
    return q;  // p stays p; external slots unchanged
  };

  s.edge[h] = ad.vec;   // A -> D
  s.edge[n] = diag;     // D -> C
  s.edge[p] = ca.vec;   // C -> A
  s.edge[h2] = db.vec;  // D -> B
  s.edge[n2] = bc.vec;  // B -> C
  s.edge[p2] = -diag;   // C -> D

  s.opp[n] = p2;
  s.opp[p2] = n;
  auto tie = [&](int slot, int old_partner) {
    int q = remap(old_partner);
    s.opp[slot] = q;
    s.opp[q] = slot;
  };
  tie(h, ad.partner);
  tie(h2, db.partner);
  tie(n2, bc.partner);
  tie(p, ca.partner);
}

/**
 * Flip the edge at half-edge h, requiring the diamond to be strictly
 * convex so both rebuilt triangles are positively oriented.  This always
 * holds when the incircle test is strictly violated.
 */
template <class K>
void flip_edge(Surface<K>& s, int h) {
  const int h2 = s.opp[h];
  flip_edge_raw(s, h);
  require(cross_sign(s.edge[h], s.edge[Surface<K>::next(h)]) > 0 &&
              cross_sign(s.edge[h2], s.edge[Surface<K>::next(h2)]) > 0,
          "Internal", "flip produced a degenerate triangle");
}

/**
 * Flip until every edge passes the incircle test (with ties allowed).
 * Returns the number of flips performed; throws NonTerminatingFlips if the
 * budget is exhausted first.
 */
template <class K>
long make_delaunay(Surface<K>& s, long max_flips = 1000000) {
  long flips = 0;
  bool dirty = true;
  while (dirty) {
    dirty = false;
    for (int h = 0; h < s.half_edges(); ++h) {
      if (h > s.opp[h]) continue;
      if (incircle_sign(s, h) > 0) {
        require(flips < max_flips, "NonTerminatingFlips",
                "edge flipping exceeded the budget of " + std::to_string(max_flips));
        flip_edge(s, h);
        ++flips;
        dirty = true;
      }
    }
  }
  return flips;
}

namespace detail {

// lexicographic order on vectors, x before y
template <class K>
bool vec_less(const Vec2<K>& u, const Vec2<K>& v) {
  if (u.x != v.x) return u.x < v.x;
  return u.y < v.y;
}

}  // namespace detail

/**
 * Canonical form of a surface: flip to the Delaunay triangulation, merge
 * runs of cocircular triangles into their inscribed-polygon cells and fan
 * each cell from a canonically chosen corner (the rotation making the
 * boundary's vector sequence lexicographically smallest; the directions of
 * a strictly convex polygon are all distinct, so the choice is unique),
 * then relabel the mesh canonically.  Two surfaces are translation
 * equivalent as marked flat surfaces if and only if their canonical forms
 * are equal meshes, which makes exact surface equality decidable.
 */
template <class K>
Surface<K> delaunay_canonicalize(const Surface<K>& s0, long max_flips = 1000000) {
  Surface<K> s = s0;
  make_delaunay(s, max_flips);

  const int F = s.faces();
  // group triangles into cocircular cells (union-find over degenerate edges)
  std::vector<int> parent(F);
  for (int t = 0; t < F; ++t) parent[t] = t;
  std::function<int(int)> find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  std::vector<char> degenerate(s.half_edges(), 0);
  for (int h = 0; h < s.half_edges(); ++h) {
    if (h > s.opp[h]) continue;
    if (incircle_sign(s, h) == 0) {
      degenerate[h] = degenerate[s.opp[h]] = 1;
      parent[find(Surface<K>::tri(h))] = find(Surface<K>::tri(s.opp[h]));
    }
  }
  std::map<int, std::vector<int>> cells;  // root -> triangles, in triangle order
  for (int t = 0; t < F; ++t) cells[find(t)].push_back(t);

  Surface<K> out;
  out.d = s.d;
  out.label = s.label;
  std::vector<int> new_slot(s.half_edges(), -1);  // old boundary half-edge -> new slot
  std::vector<std::pair<int, int>> pending;       // (new slot, old partner half-edge)

  for (const auto& [root, tris] : cells) {
    // walk the cell boundary: start at any non-degenerate half-edge and
    // advance with next(), hopping across degenerate edges
    int start = -1;
    for (int t : tris)
      for (int i = 0; i < 3 && start == -1; ++i)
        if (!degenerate[3 * t + i]) start = 3 * t + i;
    require(start != -1, "Internal", "cocircular cell has no boundary");

    std::vector<int> walk;  // old half-edge ids along the boundary
    int h = start;
    do {
      walk.push_back(h);
      h = Surface<K>::next(h);
      while (degenerate[h]) h = Surface<K>::next(s.opp[h]);
    } while (h != start);
    const int B = static_cast<int>(walk.size());
    require(B >= 3 && B == static_cast<int>(tris.size()) + 2, "Internal",
            "cocircular cell is not a disk");

    // canonical rotation: lexicographically smallest vector sequence
    auto rot_less = [&](int r1, int r2) {
      for (int i = 0; i < B; ++i) {
        const Vec2<K>&u = s.edge[walk[(r1 + i) % B]], &v = s.edge[walk[(r2 + i) % B]];
        if (u != v) return detail::vec_less(u, v);
      }
      return false;
    };
    int best = 0;
    for (int r = 1; r < B; ++r)
      if (rot_less(r, best)) best = r;
    std::rotate(walk.begin(), walk.begin() + best, walk.end());

    std::vector<Vec2<K>> pos(B);
    Vec2<K> acc{};
    K msum{};
    for (int i = 0; i < B; ++i) {
      pos[i] = acc;
      acc += s.edge[walk[i]];
      msum += mag1(s.edge[walk[i]]);
      require(cross_sign(s.edge[walk[i]], s.edge[walk[(i + 1) % B]]) > 0, "Internal",
              "cocircular cell boundary is not strictly convex");
    }
    require(kernel_traits<K>::sign(acc.x, msum) == 0 && kernel_traits<K>::sign(acc.y, msum) == 0,
            "Internal", "cocircular cell boundary does not close");

    // fan from vertex 0: triangles (0, i, i+1)
    int prev_diag_slot = -1;
    for (int i = 1; i + 1 < B; ++i) {
      int base = out.half_edges();
      out.edge.push_back(pos[i] - pos[0]);
      out.edge.push_back(pos[i + 1] - pos[i]);
      out.edge.push_back(pos[0] - pos[i + 1]);
      out.opp.insert(out.opp.end(), {-1, -1, -1});

      if (i == 1) {
        new_slot[walk[0]] = base;
        pending.emplace_back(base, s.opp[walk[0]]);
      } else {
        out.opp[base] = prev_diag_slot;
        out.opp[prev_diag_slot] = base;
      }
      new_slot[walk[i]] = base + 1;
      pending.emplace_back(base + 1, s.opp[walk[i]]);
      if (i + 2 == B) {
        new_slot[walk[B - 1]] = base + 2;
        pending.emplace_back(base + 2, s.opp[walk[B - 1]]);
      } else {
        prev_diag_slot = base + 2;
      }
    }
  }

  for (const auto& [slot, old_partner] : pending) {
    require(new_slot[old_partner] != -1, "Internal", "boundary partner lost in rebuild");
    out.opp[slot] = new_slot[old_partner];
  }
  validate_mesh(out);
  return canonical_label(out);
}

/**
 * Exact translation equivalence of surfaces (as marked flat structures):
 * compare canonical forms.
 */
template <class K>
bool surfaces_equal(const Surface<K>& a, const Surface<K>& b) {
  return mesh_equal(delaunay_canonicalize(a), delaunay_canonicalize(b));
}

}  // namespace flatlab
