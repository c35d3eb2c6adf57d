#include <algorithm>
#include <random>
#include <utility>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "flatlab/constructions.hpp"
#include "flatlab/cylinders.hpp"
#include "flatlab/delaunay.hpp"
#include "helpers.hpp"

using namespace flatlab;

namespace {

QuadNum root2() { return QuadNum::sqrt_of(2); }
Rational rat(long n, long d = 1) { return Rational(n, d); }

Vec2<QuadNum> vq(QuadNum x, QuadNum y) { return {std::move(x), std::move(y)}; }

QuadNum covered_area(const CylinderDecomposition& dec) {
  QuadNum a(0);
  for (const Cylinder& c : dec.cylinders) a += c.w * c.h;
  return a;
}

// The golden staircase used throughout: three horizontal cylinders over
// Q(sqrt 5) whose parameters satisfy both eigenform equations.
ExactSurface staircase() { return decagon_staircase(); }

}  // namespace

TEST_CASE("directions reduce to primitive integer vectors") {
  CHECK(primitive_direction(vq(rat(1, 2), rat(1, 3))) == vq(3, 2));
  CHECK(primitive_direction(vq(4, 6)) == vq(2, 3));
  CHECK(primitive_direction(vq(-4, 6)) == vq(-2, 3));
  const Vec2<QuadNum> slant = vq(QuadNum(Rational(1, 2), Rational(1, 2), 2),
                                 QuadNum(Rational(0), Rational(1, 4), 2));
  const Vec2<QuadNum> red = primitive_direction(slant);
  CHECK(red == vq(QuadNum(Rational(2), Rational(2), 2),
                  QuadNum(Rational(0), Rational(1), 2)));
  CHECK_THROWS_WITH(primitive_direction(vq(0, 0)),
                    Catch::Matchers::ContainsSubstring("zero vector"));
}

TEST_CASE("horizontal flow on the square torus is one unit cylinder") {
  const CylinderDecomposition dec =
      periodic_direction_decompose(square_torus(), vq(1, 0));
  REQUIRE(dec.cylinders.size() == 1);
  CHECK(dec.cylinders[0].w == QuadNum(1));
  CHECK(dec.cylinders[0].h == QuadNum(1));
  CHECK(dec.cylinders[0].t == QuadNum(0));
  REQUIRE(dec.connections.size() == 1);
  CHECK(dec.connections[0].len == QuadNum(1));
  CHECK(dec.connections[0].below == 0);
  CHECK(dec.connections[0].above == 0);
}

TEST_CASE("every primitive lattice direction on the torus is a unit cylinder") {
  const ExactSurface s = square_torus();
  const long dirs[][2] = {{0, 1}, {1, 1}, {2, 1}, {1, 2}, {3, 2}, {-2, 3}, {5, -3}};
  for (auto [p, q] : dirs) {
    const CylinderDecomposition dec = periodic_direction_decompose(s, vq(p, q));
    REQUIRE(dec.cylinders.size() == 1);
    CHECK(dec.cylinders[0].w == QuadNum(1));
    CHECK(dec.cylinders[0].h == QuadNum(1));
  }
}

TEST_CASE("the regular octagon splits into two horizontal cylinders") {
  const CylinderDecomposition dec =
      periodic_direction_decompose(regular_octagon(), vq(1, 0));
  REQUIRE(dec.cylinders.size() == 2);
  std::vector<std::pair<QuadNum, QuadNum>> wh;
  for (const Cylinder& c : dec.cylinders) wh.push_back({c.w, c.h});
  std::sort(wh.begin(), wh.end());
  CHECK(wh[0].first == QuadNum(Rational(1), Rational(1), 2));   // 1 + sqrt2
  CHECK(wh[0].second == QuadNum(1));
  CHECK(wh[1].first == QuadNum(Rational(2), Rational(1), 2));   // 2 + sqrt2
  CHECK(wh[1].second == QuadNum(Rational(0), Rational(1, 2), 2));
  CHECK(covered_area(dec) == total_area(regular_octagon()));
}

TEST_CASE("gluing data of a staircase table is recovered exactly") {
  const QuadNum w1(1), w2 = root2();
  const QuadNum h1 = rat(1, 2), h2 = rat(1, 3), h3 = rat(1, 4);
  const QuadNum t1 = rat(1, 7), t2 = rat(2, 5), t3 = rat(3, 11);
  const ExactSurface s = z_table(w1, w2, h1, h2, h3, t1, t2, t3);
  const NormalizedParams np =
      normalize_params(periodic_direction_decompose(s, vq(1, 0)));
  CHECK(np.w1 == w1);
  CHECK(np.w2 == w2);
  CHECK(np.w3 == w1 + w2);
  CHECK(np.h1 == h1);
  CHECK(np.h2 == h2);
  CHECK(np.h3 == h3);
  CHECK(np.t1 == t1);
  CHECK(np.t2 == t2);
  CHECK(np.t3 == t3);
  CHECK(np.m == total_area(s));

  // A remeshed presentation of the same surface reports the same chart.
  const NormalizedParams np2 = normalize_params(
      periodic_direction_decompose(delaunay_canonicalize(s), vq(1, 0)));
  CHECK(np2.t1 == t1);
  CHECK(np2.t2 == t2);
  CHECK(np2.t3 == t3);
  CHECK(np2.h1 == h1);
  CHECK(np2.m == np.m);
}

TEST_CASE("cylinder areas sum to the surface area in every direction") {
  const ExactSurface s = slit_tori(1, 2, rat(1, 3));
  const QuadNum area = total_area(s);
  const long dirs[][2] = {{1, 0}, {0, 1}, {1, 1}, {2, 1}, {1, 3}, {3, -2}};
  for (auto [p, q] : dirs) {
    const CylinderDecomposition dec = periodic_direction_decompose(s, vq(p, q));
    CHECK(covered_area(dec) == area);
  }
}

TEST_CASE("saddle directions of the golden staircase all close up") {
  const ExactSurface s = staircase();
  std::vector<Vec2<QuadNum>> dirs;
  for (int h = 0; h < s.half_edges(); ++h) {
    Vec2<QuadNum> d = primitive_direction(s.edge[h]);
    if (d.y.sign() < 0 || (d.y.sign() == 0 && d.x.sign() < 0)) d = -d;
    if (std::find(dirs.begin(), dirs.end(), d) == dirs.end()) dirs.push_back(d);
  }
  REQUIRE(dirs.size() >= 4);
  for (const Vec2<QuadNum>& d : dirs) {
    const CylinderDecomposition dec = periodic_direction_decompose(s, d);
    CHECK(covered_area(dec) == QuadNum(5));
  }
}

TEST_CASE("an irrational slope on the torus exhausts its trace budget") {
  CHECK_THROWS_WITH(
      periodic_direction_decompose(square_torus(), vq(1, root2()), 500),
      Catch::Matchers::ContainsSubstring("500"));
  try {
    periodic_direction_decompose(square_torus(), vq(1, root2()), 500);
    FAIL("expected a trace budget failure");
  } catch (const Error& e) {
    CHECK(e.code() == "TraceBudgetExceeded");
  }
}

TEST_CASE("parameter charts require the staircase width relation") {
  CHECK_THROWS_WITH(
      normalize_params(periodic_direction_decompose(square_torus(), vq(1, 0))),
      Catch::Matchers::ContainsSubstring("three-cylinder"));

  CylinderDecomposition fake;
  fake.direction = vq(1, 0);
  for (long w : {1, 1, 3}) {
    Cylinder c;
    c.w = QuadNum(w);
    c.h = QuadNum(1);
    c.t = QuadNum(0);
    fake.cylinders.push_back(c);
  }
  try {
    normalize_params(fake);
    FAIL("expected a missing sum relation");
  } catch (const Error& e) {
    CHECK(e.code() == "NoSumRelation");
  }

  const ExactSurface even = z_table(1, 1, rat(1, 2), rat(1, 2), rat(1, 2),
                                    QuadNum(0), QuadNum(0), QuadNum(0));
  const NormalizedParams np =
      normalize_params(periodic_direction_decompose(even, vq(1, 0)));
  CHECK(np.w3 == QuadNum(2));
}

TEST_CASE("membership in the eigenform locus is decided exactly") {
  // Member over Q(sqrt 2): w = (1, sqrt2), s = (sqrt2, 1), no twisting.
  const ExactSurface good = z_table(1, root2(), root2() - rat(1, 4), rat(3, 4),
                                    rat(1, 4), QuadNum(0), QuadNum(0), QuadNum(0));
  const LmVerdict ok =
      check_lm(normalize_params(periodic_direction_decompose(good, vq(1, 0))));
  CHECK(ok.member);
  CHECK(ok.m == QuadNum(2) * root2());

  // A one-in-a-thousand perturbation of one height is detected exactly.
  const ExactSurface bent =
      z_table(1, root2(), root2() - rat(1, 4), rat(3, 4) + rat(1, 1000),
              rat(1, 4), QuadNum(0), QuadNum(0), QuadNum(0));
  const LmVerdict bad =
      check_lm(normalize_params(periodic_direction_decompose(bent, vq(1, 0))));
  CHECK_FALSE(bad.member);
  CHECK(bad.equation == "eq1");
  CHECK(bad.residual == QuadNum(Rational(0), Rational(1, 1000), 2));

  // Flat rational data never satisfies the conjugate-sum equation.
  NormalizedParams flat;
  flat.w1 = flat.w2 = QuadNum(1);
  flat.w3 = QuadNum(2);
  flat.s1 = flat.s2 = QuadNum(1);
  flat.tau1 = flat.tau2 = QuadNum(0);
  flat.m = QuadNum(2);
  const LmVerdict no = check_lm(flat);
  CHECK_FALSE(no.member);
  CHECK(no.equation == "eq1");
  CHECK(no.residual == QuadNum(2));
}

TEST_CASE("the golden staircase lies in the locus of area five") {
  const NormalizedParams np =
      normalize_params(periodic_direction_decompose(staircase(), vq(1, 0)));
  CHECK(np.w1 == QuadNum(2));
  CHECK(np.w2 == QuadNum(Rational(1), Rational(1), 5));
  CHECK(np.t1 == QuadNum(1));
  CHECK(np.t2 == QuadNum(0));
  CHECK(np.t3 == QuadNum(Rational(3, 2), Rational(1, 2), 5));
  const LmVerdict v = check_lm(np);
  CHECK(v.member);
  CHECK(v.m == QuadNum(5));

  // Full turns of any cylinder twist shift the second equation by a width
  // norm, which the lattice quotient absorbs.
  for (int k : {-2, -1, 1, 3}) {
    NormalizedParams turned = np;
    turned.tau1 = np.tau1 + QuadNum(k) * np.w1;
    CHECK(check_lm(turned).member);
    turned = np;
    turned.tau2 = np.tau2 + QuadNum(k) * np.w2;
    CHECK(check_lm(turned).member);
    turned = np;
    turned.tau1 = np.tau1 + QuadNum(k) * np.w3;
    turned.tau2 = np.tau2 + QuadNum(k) * np.w3;
    CHECK(check_lm(turned).member);
  }

  // Breaking the lattice condition by a fractional turn is caught.
  NormalizedParams off = np;
  off.tau1 = np.tau1 + rat(1, 3);
  const LmVerdict frac = check_lm(off);
  CHECK_FALSE(frac.member);
  CHECK(frac.equation == "eq2");
  CHECK(frac.residual != QuadNum(0));
}

TEST_CASE("twist shears and unit rescalings preserve the verdict") {
  const NormalizedParams member =
      normalize_params(periodic_direction_decompose(staircase(), vq(1, 0)));
  const NormalizedParams violated = [&] {
    NormalizedParams v = member;
    v.s1 = member.s1 + rat(1, 9);
    v.m = v.w1 * v.s1 + v.w2 * v.s2;
    return v;
  }();

  std::mt19937 rng(42);
  std::uniform_int_distribution<long> num(-12, 12);
  std::uniform_int_distribution<long> den(1, 9);
  const auto random_field_element = [&](long d) {
    return QuadNum(Rational(num(rng), den(rng)), Rational(num(rng), den(rng)), d);
  };
  for (int i = 0; i < 60; ++i) {
    const QuadNum t = random_field_element(5);
    for (const NormalizedParams* base : {&member, &violated}) {
      NormalizedParams sheared = *base;
      sheared.tau1 = base->tau1 + t * base->s1;
      sheared.tau2 = base->tau2 + t * base->s2;
      CHECK(check_lm(sheared).member == check_lm(*base).member);
      CHECK(check_lm(sheared).m == base->m);
    }
  }

  // Rescale by units of the golden order: lambda = (1+sqrt5)/2 has norm -1.
  // Twists are first shifted by a full turn to make the second equation
  // vanish on the nose, which a rescaling then multiplies by a unit.
  const NormalizedParams flat_member = [&] {
    NormalizedParams v = member;
    v.tau1 = member.tau1 - member.w1;
    return v;
  }();
  REQUIRE(check_lm(flat_member).member);
  const QuadNum lambda(Rational(1, 2), Rational(1, 2), 5);
  for (const NormalizedParams* base : {&flat_member, &violated}) {
    NormalizedParams r = *base;
    for (int k = 0; k < 25; ++k) {
      r.w1 = lambda * r.w1;
      r.w2 = lambda * r.w2;
      r.w3 = lambda * r.w3;
      r.s1 = r.s1 / lambda;
      r.s2 = r.s2 / lambda;
      r.tau1 = r.tau1 / lambda;
      r.tau2 = r.tau2 / lambda;
      r.m = r.w1 * r.s1 + r.w2 * r.s2;
      CHECK(check_lm(r).member == check_lm(*base).member);
      CHECK(r.m == base->m);
    }
  }
}

TEST_CASE("an upper triangular shear moves each twist by its height") {
  const ExactSurface s = z_table(1, root2(), rat(1, 2), rat(1, 3), rat(1, 4),
                                 rat(1, 7), rat(2, 5), rat(3, 11));
  const NormalizedParams np =
      normalize_params(periodic_direction_decompose(s, vq(1, 0)));
  const ExactSurface sheared = apply_sl2(s, Mat2<QuadNum>::shear_u(QuadNum(1)));
  const NormalizedParams np2 =
      normalize_params(periodic_direction_decompose(sheared, vq(1, 0)));
  CHECK(np2.w1 == np.w1);
  CHECK(np2.h1 == np.h1);
  CHECK(np2.t1 == detail::mod_positive(np.t1 + np.h1, np.w1));
  CHECK(np2.t2 == detail::mod_positive(np.t2 + np.h2, np.w2));
  CHECK(np2.t3 == detail::mod_positive(np.t3 + np.h3, np.w3));

  // The same shear applied to the golden staircase keeps its membership.
  const ExactSurface gs = apply_sl2(staircase(), Mat2<QuadNum>::shear_u(QuadNum(1)));
  CHECK(check_lm(normalize_params(periodic_direction_decompose(gs, vq(1, 0)))).member);
}
