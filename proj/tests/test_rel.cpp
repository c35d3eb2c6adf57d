#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <utility>

#include "flatlab/constructions.hpp"
#include "flatlab/delaunay.hpp"
#include "flatlab/rel.hpp"

using namespace flatlab;

namespace {

Rational rat(long n, long d = 1) { return Rational(n, d); }

Vec2<QuadNum> vq(const Rational& x, const Rational& y) {
  return {QuadNum(x), QuadNum(y)};
}

// Flow both cone classes of a two-class surface along v; for the fixtures
// used here exactly one stays inside the stratum and one collides at the
// very end of the flow.
struct Probe {
  int valid = -1, collides = -1;
  RelOutcome valid_out, collides_out;
};

Probe probe_classes(const ExactSurface& s, const Vec2<QuadNum>& v) {
  Probe pr;
  for (int c = 0; c < 2; ++c) {
    RelOutcome out = rel_translate(s, c, v);
    if (out.degenerate) {
      pr.collides = c;
      pr.collides_out = std::move(out);
    } else {
      pr.valid = c;
      pr.valid_out = std::move(out);
    }
  }
  return pr;
}

}  // namespace

TEST_CASE("moving a cone class slides the slit, exactly") {
  ExactSurface s = slit_tori(QuadNum(1), QuadNum(2), QuadNum(rat(1, 3)));
  Probe pr = probe_classes(s, vq(rat(1, 3), rat(0)));
  REQUIRE(pr.valid != -1);
  REQUIRE(pr.collides != -1);

  // the free direction lengthens the slit from 1/3 to 2/3
  ExactSurface target = slit_tori(QuadNum(1), QuadNum(2), QuadNum(rat(2, 3)));
  CHECK(surfaces_equal(pr.valid_out.surface, target));
  CHECK(total_area(pr.valid_out.surface) == QuadNum(3));
  CHECK(stratum(pr.valid_out.surface).name() == "H(1,1)");

  // two half slides compose to the full slide; sliding the other class by
  // the same vector merely translates the picture and reproduces the input
  ExactSurface halfway =
      rel_translate(s, pr.valid, vq(rat(1, 6), rat(0))).surface;
  bool composed = false, translated = false;
  for (int c = 0; c < 2; ++c) {
    RelOutcome second = rel_translate(halfway, c, vq(rat(1, 6), rat(0)));
    REQUIRE_FALSE(second.degenerate);
    if (surfaces_equal(second.surface, target)) composed = true;
    if (surfaces_equal(second.surface, s)) translated = true;
  }
  CHECK(composed);
  CHECK(translated);
}

TEST_CASE("a single shrinking connection collapses to a genus-two surface") {
  ExactSurface s = slit_tori(QuadNum(1), QuadNum(2), QuadNum(rat(1, 3)));
  Probe pr = probe_classes(s, vq(rat(1, 3), rat(0)));

  // carried all the way, the sliding class meets the other one inside the
  // narrow torus only: one connection shrinks to a point
  RelOutcome out = rel_translate(s, pr.valid, vq(rat(2, 3), rat(0)));
  REQUIRE(out.degenerate);
  CHECK(out.kind == "H2_surface");
  REQUIRE(out.components.size() == 1);
  const ExactSurface& collapsed = out.components[0];
  CHECK(total_area(collapsed) == QuadNum(3));
  CHECK(stratum(collapsed).name() == "H(2)");

  // the collapsed surface is the 2x2 step table, cut and pasted
  CHECK(surfaces_equal(collapsed, l_table(QuadNum(2), QuadNum(2))));
}

TEST_CASE("symmetric collisions pinch the surface into two touching tori") {
  ExactSurface s = slit_tori(QuadNum(1), QuadNum(1), QuadNum(rat(1, 3)));
  Probe pr = probe_classes(s, vq(rat(1, 3), rat(0)));
  REQUIRE(pr.collides != -1);

  const RelOutcome& out = pr.collides_out;
  CHECK(out.kind == "two_tori_wedge");
  REQUIRE(out.components.size() == 2);
  for (const ExactSurface& piece : out.components) {
    CHECK(total_area(piece) == QuadNum(1));
    CHECK(stratum(piece).genus == 1);
    CHECK(surfaces_equal(piece, square_torus()));
  }
}

TEST_CASE("a collision strictly inside the flow is refused") {
  ExactSurface s = slit_tori(QuadNum(1), QuadNum(2), QuadNum(rat(1, 3)));
  Probe pr = probe_classes(s, vq(rat(1, 3), rat(0)));

  try {
    rel_translate(s, pr.collides, vq(rat(2, 3), rat(0)));
    FAIL("expected the deformation to be refused");
  } catch (const Error& e) {
    CHECK(e.code() == "CollisionBeyondBoundary");
    CHECK(std::string(e.what()).find("1/2") != std::string::npos);
  }
}

TEST_CASE("vertical deformations retriangulate and stay in the stratum") {
  ExactSurface s = slit_tori(QuadNum(1), QuadNum(2), QuadNum(rat(1, 3)));
  RelOutcome out = rel_translate(s, 0, vq(rat(0), rat(5)));
  REQUIRE_FALSE(out.degenerate);
  CHECK(out.events > 0);
  CHECK(total_area(out.surface) == QuadNum(3));
  CHECK(stratum(out.surface).name() == "H(1,1)");
  CHECK(period_module(out.surface) == period_module(s));

  // moving the other class the opposite way gives the same surface
  RelOutcome mirror = rel_translate(s, 1, vq(rat(0), rat(-5)));
  REQUIRE_FALSE(mirror.degenerate);
  CHECK(surfaces_equal(out.surface, mirror.surface));

  try {
    rel_translate(s, 0, vq(rat(0), rat(5)), 1);
    FAIL("expected the retriangulation budget to trip");
  } catch (const Error& e) {
    CHECK(e.code() == "NonTerminatingFlips");
  }
}

TEST_CASE("deformations of a golden-ratio surface keep loop periods") {
  ExactSurface s = decagon_staircase();
  Vec2<QuadNum> v = vq(rat(1, 10), rat(1, 10));
  RelOutcome out = rel_translate(s, 0, v);
  REQUIRE_FALSE(out.degenerate);
  CHECK(total_area(out.surface) == QuadNum(5));
  CHECK(stratum(out.surface).name() == "H(1,1)");
  CHECK(period_module(out.surface) == period_module(s));
  CHECK_FALSE(surfaces_equal(out.surface, s));

  RelOutcome mirror = rel_translate(s, 1, -v);
  REQUIRE_FALSE(mirror.degenerate);
  CHECK(surfaces_equal(out.surface, mirror.surface));
}

TEST_CASE("absolute period modules are computed in normal form") {
  using Row = std::array<mpz_class, 4>;

  PeriodModule sq = period_module(square_torus());
  CHECK(sq.den == 1);
  REQUIRE(sq.rows.size() == 2);
  CHECK(sq.rows[0] == Row{1, 0, 0, 0});
  CHECK(sq.rows[1] == Row{0, 0, 1, 0});

  PeriodModule oct = period_module(regular_octagon());
  CHECK(oct.den == 2);
  REQUIRE(oct.rows.size() == 4);
  CHECK(oct.rows[0] == Row{2, 0, 0, 0});
  CHECK(oct.rows[1] == Row{0, 1, 0, 1});
  CHECK(oct.rows[2] == Row{0, 0, 2, 0});
  CHECK(oct.rows[3] == Row{0, 0, 0, 2});

  // the module sees the surface, not its presentation
  CHECK(period_module(decagon_staircase()) == period_module(normalized_decagon()));
  CHECK(period_module(delaunay_canonicalize(square_torus())) == sq);

  // integer shears fix the square lattice, fractional ones do not
  CHECK(period_module(torus(vq(rat(1), rat(0)), vq(rat(1), rat(1)))) == sq);
  CHECK(period_module(torus(vq(rat(1), rat(0)), vq(rat(1, 2), rat(1)))) != sq);
}

TEST_CASE("deformation inputs are validated") {
  ExactSurface s = slit_tori(QuadNum(1), QuadNum(2), QuadNum(rat(1, 3)));
  try {
    rel_translate(s, 7, vq(rat(1), rat(0)));
    FAIL("expected the class index to be rejected");
  } catch (const Error& e) {
    CHECK(e.code() == "DomainError");
  }

  try {
    rel_translate(l_table(QuadNum(2), QuadNum(2)), 0, vq(rat(1), rat(0)));
    FAIL("expected a single-class surface to be rejected");
  } catch (const Error& e) {
    CHECK(e.code() == "UnsupportedStratum");
  }
}
