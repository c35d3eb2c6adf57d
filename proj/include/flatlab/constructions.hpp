#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "flatlab/surface.hpp"

namespace flatlab {

/**
 * Torus from a positively-oriented lattice basis: one parallelogram with
 * opposite sides glued.  Genus 1, one marked point of angle 2*pi.
 */
inline ExactSurface torus(const Vec2<QuadNum>& v1, const Vec2<QuadNum>& v2,
                          std::string label = "torus") {
  require(QuadNum(cross(v1, v2)).sign() > 0, "DomainError",
          "torus basis must be positively oriented");
  Polygon<QuadNum> p = {v1, v2, -v1, -v2};
  return build_surface<QuadNum>({p}, {{0, 0, 0, 2}, {0, 1, 0, 3}}, -1, std::move(label));
}

inline ExactSurface square_torus() {
  return torus({QuadNum(1), QuadNum(0)}, {QuadNum(0), QuadNum(1)}, "square_torus");
}

/**
 * L-shaped table with outer width a and outer height b (both > 1): the union
 * of an a x 1 horizontal rectangle and a 1 x b vertical rectangle, opposite
 * horizontal and vertical boundary segments glued.  One cone point of angle
 * 6*pi; area a + b - 1.
 */
inline ExactSurface l_table(const QuadNum& a, const QuadNum& b) {
  require(a > QuadNum(1) && b > QuadNum(1), "DomainError",
          "l_table needs a > 1 and b > 1");
  const QuadNum z(0), u(1);
  Polygon<QuadNum> p = {
      {u, z},      // bottom, left part   [0,1]
      {a - u, z},  // bottom, right part  [1,a]
      {z, u},      // right wall of the wide rectangle
      {u - a, z},  // top of the wide rectangle
      {z, b - u},  // right wall of the tall rectangle
      {-u, z},     // top of the tall rectangle
      {z, u - b},  // left wall, upper part
      {z, -u},     // left wall, lower part
  };
  std::vector<GluePair> g = {{0, 0, 0, 5}, {0, 1, 0, 3}, {0, 2, 0, 7}, {0, 4, 0, 6}};
  return build_surface<QuadNum>({p}, g, -1,
                                "l_table(" + a.str() + "," + b.str() + ")");
}

/**
 * Staircase ("Z") table: three horizontal cylinders stacked with offsets.
 * Parallelograms P1 (base w1, slant (t1, h1)) and P2 (base w2, slant
 * (t2, h2)) sit above the hexagon P3 (bases w1 then w2, slant (t3, h3)):
 * P3's top edges carry P1 and P2, whose tops wrap back to P3's bottom.  The
 * slant offsets t1, t2, t3 shear each cylinder before gluing.
 *
 * The result lies in H(1,1): the two seam points (between the P1/P2 tops
 * and P3's bottom) are cone points of angle 4*pi.  The horizontal direction
 * decomposes into the three cylinders with widths w1, w2 and w1 + w2, so
 * the cylinder widths satisfy the sum relation by construction.  Area is
 * w1*h1 + w2*h2 + (w1 + w2)*h3.
 */
inline ExactSurface z_table(const QuadNum& w1, const QuadNum& w2, const QuadNum& h1,
                            const QuadNum& h2, const QuadNum& h3, const QuadNum& t1,
                            const QuadNum& t2, const QuadNum& t3) {
  require(w1.sign() > 0 && w2.sign() > 0 && h1.sign() > 0 && h2.sign() > 0 && h3.sign() > 0,
          "DomainError", "z_table needs positive widths and heights");
  const QuadNum z(0);
  Polygon<QuadNum> p1 = {{w1, z}, {t1, h1}, {-w1, z}, {-t1, -h1}};
  Polygon<QuadNum> p2 = {{w2, z}, {t2, h2}, {-w2, z}, {-t2, -h2}};
  Polygon<QuadNum> p3 = {{w1, z}, {w2, z}, {t3, h3}, {-w2, z}, {-w1, z}, {-t3, -h3}};
  std::vector<GluePair> g = {
      {0, 0, 2, 4},  // P1 bottom <- P3 top-left
      {0, 2, 2, 0},  // P1 top -> P3 bottom-left
      {1, 0, 2, 3},  // P2 bottom <- P3 top-right
      {1, 2, 2, 1},  // P2 top -> P3 bottom-right
      {0, 1, 0, 3},  // P1 sides
      {1, 1, 1, 3},  // P2 sides
      {2, 2, 2, 5},  // P3 sides
  };
  std::string label = "z_table(" + w1.str() + "," + w2.str() + "," + h1.str() + "," +
                      h2.str() + "," + h3.str() + ";" + t1.str() + "," + t2.str() + "," +
                      t3.str() + ")";
  return build_surface<QuadNum>({p1, p2, p3}, g, -1, std::move(label));
}

/**
 * Two unit-height tori of widths w1 and w2, each slit open along the
 * horizontal segment from x = 0 to x = ell on its bottom edge, then glued
 * crosswise along the slits.  Genus 2; the two slit endpoints become cone
 * points of angle 4*pi, so the surface lies in H(1,1).  Area w1 + w2.
 */
inline ExactSurface slit_tori(const QuadNum& w1, const QuadNum& w2, const QuadNum& ell) {
  require(ell.sign() > 0 && ell < w1 && ell < w2, "DomainError",
          "slit length must satisfy 0 < ell < min(w1, w2)");
  const QuadNum z(0), u(1);
  auto rect = [&](const QuadNum& w) -> Polygon<QuadNum> {
    return {{ell, z}, {w - ell, z}, {z, u}, {ell - w, z}, {-ell, z}, {z, -u}};
  };
  std::vector<GluePair> g = {
      {0, 0, 1, 4}, {1, 0, 0, 4},  // slit segments crosswise
      {0, 1, 0, 3}, {1, 1, 1, 3},  // remaining bottom/top within each torus
      {0, 2, 0, 5}, {1, 2, 1, 5},  // verticals within each torus
  };
  return build_surface<QuadNum>(
      {rect(w1), rect(w2)}, g, -1,
      "slit_tori(" + w1.str() + "," + w2.str() + ";" + ell.str() + ")");
}

/**
 * Regular octagon with unit sides and opposite sides glued, exact over
 * sqrt(2).  One cone point of angle 6*pi (stratum H(2)); area 2 + 2*sqrt(2).
 */
inline ExactSurface regular_octagon() {
  const QuadNum z(0), u(1);
  const QuadNum s(Rational(0), Rational(1, 2), 2);  // sqrt(2)/2
  Polygon<QuadNum> p = {{u, z}, {s, s}, {z, u}, {-s, s}, {-u, z}, {-s, -s}, {z, -u}, {s, -s}};
  std::vector<GluePair> g = {{0, 0, 0, 4}, {0, 1, 0, 5}, {0, 2, 0, 6}, {0, 3, 0, 7}};
  return build_surface<QuadNum>({p}, g, -1, "regular_octagon");
}

/**
 * The regular decagon squashed horizontally by 1/sin(36 deg), which moves
 * every vertex into Q(sqrt(5)), with opposite sides glued.  Two cone points
 * of angle 4*pi (stratum H(1,1)); the horizontal direction is periodic.
 */
inline ExactSurface normalized_decagon() {
  const Rational q14(1, 4), q12(1, 2);
  const QuadNum phi(q12, q12, 5);        // (1 + sqrt(5))/2
  const QuadNum s18(-q14, q14, 5);       // sin(18 deg) = (sqrt(5) - 1)/4
  const QuadNum s54(q14, q14, 5);        // sin(54 deg) = (sqrt(5) + 1)/4
  const QuadNum z(0), u(1);
  std::vector<Vec2<QuadNum>> v = {
      {phi, s18}, {u, s54},  {z, u},    {-u, s54},  {-phi, s18},
      {-phi, -s18}, {-u, -s54}, {z, -u}, {u, -s54}, {phi, -s18},
  };
  Polygon<QuadNum> p;
  for (int k = 0; k < 10; ++k) p.push_back(v[(k + 1) % 10] - v[k]);
  std::vector<GluePair> g;
  for (int k = 0; k < 5; ++k) g.push_back({0, k, 0, k + 5});
  return build_surface<QuadNum>({p}, g, -1, "normalized_decagon");
}

/**
 * The normalized decagon rebuilt as a staircase: the three horizontal
 * cylinders of the decagon, with their exact widths, heights and twists
 * over Q(sqrt(5)), fed to z_table.  Same flat surface as
 * normalized_decagon up to a cut-and-paste.
 */
inline ExactSurface decagon_staircase() {
  const long d = 5;
  const QuadNum w1(2);
  const QuadNum w2(Rational(1), Rational(1), d);               // 1 + sqrt(5)
  const QuadNum h1(Rational(3, 4), Rational(-1, 4), d);        // (3 - sqrt(5))/4
  const QuadNum h2(Rational(-1, 2), Rational(1, 2), d);        // (sqrt(5) - 1)/2
  const QuadNum h3(Rational(1, 2));
  const QuadNum t1(1);
  const QuadNum t2(0);
  const QuadNum t3(Rational(3, 2), Rational(1, 2), d);         // (3 + sqrt(5))/2
  return z_table(w1, w2, h1, h2, h3, t1, t2, t3);
}

/**
 * Regular 2n-gon with unit sides and opposite sides glued, in floating
 * coordinates (most of these polygons have no quadratic coordinate model).
 */
inline NumericSurface regular_2n_gon(int n) {
  require(n >= 2, "DomainError", "regular_2n_gon needs n >= 2");
  const double pi = std::acos(-1.0);
  Polygon<double> p;
  for (int k = 0; k < 2 * n; ++k)
    p.push_back({std::cos(k * pi / n), std::sin(k * pi / n)});
  std::vector<GluePair> g;
  for (int k = 0; k < n; ++k) g.push_back({0, k, 0, k + n});
  return build_surface<double>({p}, g, 0, "regular_" + std::to_string(2 * n) + "_gon");
}

}  // namespace flatlab
