#include "flatlab/divergence.hpp"

#include <cmath>
#include <random>

#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"

using namespace flatlab;
using flatlab::testing::random_rational;

namespace {

Rational rat(long n, long d = 1) { return Rational(n, d); }

// random element of the unimodular group, built from shears so the
// determinant is one by construction
Mat2<Rational> random_unimodular(std::mt19937_64& rng) {
  const Mat2<Rational> u = Mat2<Rational>::shear_u(random_rational(rng, 8, 6));
  const Mat2<Rational> v = Mat2<Rational>::shear_v(random_rational(rng, 8, 6));
  const Mat2<Rational> w = Mat2<Rational>::shear_u(random_rational(rng, 8, 6));
  return u * v * w;
}

}  // namespace

TEST_CASE("the affine embedding carries the translation through the map") {
  const Mat2<Rational> id = Mat2<Rational>::identity();
  CHECK(embed(id, rat(0), rat(0)) == Mat3<Rational>::identity());

  const Mat3<Rational> shift = embed(id, rat(1), rat(2));
  CHECK(shift.at(0, 2) == rat(1));
  CHECK(shift.at(1, 2) == rat(2));
  CHECK(shift.at(0, 0) == rat(1));
  CHECK(shift.at(1, 1) == rat(1));

  std::mt19937_64 rng(2026);
  for (int i = 0; i < 100; ++i) {
    const Mat2<Rational> g = random_unimodular(rng);
    const Rational x = random_rational(rng), y = random_rational(rng);
    const Mat3<Rational> e = embed(g, x, y);
    CHECK(e.at(0, 2) == g.a * x + g.b * y);
    CHECK(e.at(1, 2) == g.c * x + g.d * y);
    CHECK(e.at(0, 0) == g.a);
    CHECK(e.at(0, 1) == g.b);
    CHECK(e.at(1, 0) == g.c);
    CHECK(e.at(1, 1) == g.d);
    CHECK(e.bottom_row_ok());
  }

  try {
    embed(Mat2<Rational>{rat(2), rat(0), rat(0), rat(2)}, rat(0), rat(0));
    FAIL("expected a determinant failure");
  } catch (const Error& e) {
    CHECK(e.code() == "NotUnimodular");
  }
}

TEST_CASE("the embedding composes like the semidirect product") {
  std::mt19937_64 rng(77);
  for (int i = 0; i < 60; ++i) {
    const Mat2<Rational> g1 = random_unimodular(rng);
    const Mat2<Rational> g2 = random_unimodular(rng);
    const Rational x1 = random_rational(rng), y1 = random_rational(rng);
    const Rational x2 = random_rational(rng), y2 = random_rational(rng);

    // (g1,w1)*(g2,w2) translates by w2 + g2^{-1} w1
    const Rational x3 = x2 + (g2.d * x1 - g2.b * y1);
    const Rational y3 = y2 + (-g2.c * x1 + g2.a * y1);
    const Mat3<Rational> lhs = embed(g1, x1, y1) * embed(g2, x2, y2);
    CHECK(lhs == embed(g1 * g2, x3, y3));
    CHECK(lhs.bottom_row_ok());
  }
}

TEST_CASE("products of generators keep the bottom row and invert exactly") {
  using M = Mat3<Rational>;
  std::mt19937_64 rng(31);
  for (int i = 0; i < 40; ++i) {
    const Rational r = random_rational(rng, 5, 7);
    const M p = M::shear_u(random_rational(rng)) * M::dilate(rat(1) + r * r) *
                M::translate_x(random_rational(rng)) *
                M::shear_v(random_rational(rng)) *
                M::translate_y(random_rational(rng));
    CHECK(p.bottom_row_ok());
    CHECK(p * p.inverse() == M::identity());
    CHECK(p.inverse() * p == M::identity());
  }
}

TEST_CASE("the straightening shear has its closed form") {
  std::mt19937_64 rng(59);
  for (int i = 0; i < 30; ++i) {
    const Rational t = random_rational(rng);
    CHECK(f_of(Mat2<Rational>::identity(), t) == t);
  }
  // diagonal part rescales the shear by the square of its upper entry
  const Mat2<Rational> a = Mat2<Rational>::diag(rat(2), rat(1, 2));
  CHECK(f_of(a, rat(3)) == rat(12));
  // hand-checked rational value
  const Mat2<Rational> lower{rat(1), rat(0), rat(1), rat(1)};
  CHECK(f_of(lower, rat(1, 2)) == rat(1));

  try {
    f_of(lower, rat(1));  // denominator 1 - 1*1
    FAIL("expected a pole");
  } catch (const Error& e) {
    CHECK(e.code() == "PoleAtT");
  }
}

TEST_CASE("the conjugated product is lower triangular, exactly") {
  std::mt19937_64 rng(101);
  int checked = 0;
  while (checked < 500) {
    const Mat2<Rational> g = random_unimodular(rng);
    const Rational x = random_rational(rng), y = random_rational(rng);
    const Rational t = random_rational(rng);
    if ((g.d - t * g.c).is_zero()) continue;
    ++checked;
    const Mat3<Rational> p = conjugated_product(g, x, y, t);
    const Rational f = f_of(g, t);
    CHECK(p.at(0, 1) == rat(0));
    CHECK(p.at(0, 0) == g.a + f * g.c);
    CHECK(p.at(1, 0) == g.c);
    CHECK(p.at(1, 1) == g.d - t * g.c);
    CHECK(p.at(0, 2) == (g.a * x + g.b * y) + f * (g.c * x + g.d * y));
    CHECK(p.at(1, 2) == g.c * x + g.d * y);
    CHECK(p.bottom_row_ok());
    CHECK(p.at(0, 0) * p.at(1, 1) == rat(1));  // unimodular diagonal
  }
}

TEST_CASE("the floating backend cancels to machine precision") {
  std::mt19937_64 rng(420);
  std::uniform_real_distribution<double> coef(-3.0, 3.0);
  double worst = 0;
  for (int i = 0; i < 2000; ++i) {
    const Mat2<double> g = Mat2<double>::shear_u(coef(rng)) *
                           Mat2<double>::shear_v(coef(rng)) *
                           Mat2<double>::shear_u(coef(rng));
    const double t = coef(rng);
    if (std::abs(g.d - t * g.c) < 1e-3) continue;
    const Mat3<double> p = conjugated_product(g, coef(rng), coef(rng), t);
    worst = std::max(worst, std::abs(p.at(0, 1)));
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("a frozen rational run of the renormalized product") {
  // c = 1/10 dominates y = 1/100; at depth 1/10 the probing time is 1
  const Rational t =
      t_k_rule(rat(1, 10), rat(1, 100), rat(1, 10));
  CHECK(t == rat(1));

  const Mat2<Rational> g{rat(1), rat(0), rat(1, 10), rat(1)};
  const Mat3<Rational> p = conjugated_product(g, rat(0), rat(1, 100), t);
  CHECK(p.at(0, 0) == rat(10, 9));
  CHECK(p.at(0, 1) == rat(0));
  CHECK(p.at(1, 0) == rat(1, 10));
  CHECK(p.at(1, 1) == rat(9, 10));
  CHECK(p.at(0, 2) == rat(1, 90));
  CHECK(p.at(1, 2) == rat(1, 100));
}

TEST_CASE("the probing time binds the dominant coefficient exactly") {
  CHECK(t_k_rule(rat(1, 10), rat(1, 100), rat(1, 10)) == rat(1));
  CHECK(t_k_rule(rat(0), rat(1, 2), rat(1, 10)) == rat(1, 5));
  CHECK(t_k_rule(rat(1, 2), rat(0), rat(1, 10)) == rat(1, 5));
  CHECK(t_k_rule(rat(-3, 7), rat(-3, 7), rat(1, 10)) == rat(7, 30));

  std::mt19937_64 rng(7);
  for (int i = 0; i < 50; ++i) {
    const Rational c = random_rational(rng), y = random_rational(rng);
    if (c.is_zero() && y.is_zero()) continue;
    const Rational delta = rat(1, 10);
    const Rational t = t_k_rule(c, y, delta);
    const Rational big = c.abs() < y.abs() ? y.abs() : c.abs();
    CHECK(t * big == delta);
    CHECK(t_k_rule(-c, y, delta) == t);
  }

  try {
    t_k_rule(rat(0), rat(0), rat(1, 10));
    FAIL("expected both coefficients zero to be refused");
  } catch (const Error& e) {
    CHECK(e.code() == "BothZero");
  }
}

TEST_CASE("slowly decaying shears accumulate on the two boundary points") {
  const LimitReport rep = limit_region_check(case_a_sequence(0.1), 1000000);
  CHECK(rep.which_case == "A");
  CHECK(rep.cauchy);
  CHECK(rep.distance <= 1e-3);
  CHECK(rep.pass);
  CHECK(std::abs(rep.lambda - 1.0 / 0.9) <= 1e-3);
  CHECK(std::abs(rep.mu - 0.9) <= 1e-3);
  CHECK(std::abs(rep.x_part) <= 0.1 / 0.9 + 1e-3);

  // flipping the shear sign lands on the other boundary point
  const LimitReport neg =
      limit_region_check(case_a_sequence(0.1, -1.0, 1.0), 1000000);
  CHECK(neg.pass);
  CHECK(std::abs(neg.lambda - 1.0 / 1.1) <= 1e-3);
  CHECK(std::abs(neg.mu - 1.1) <= 1e-3);
}

TEST_CASE("slowly decaying drifts accumulate inside the sandwich region") {
  const LimitReport rep = limit_region_check(case_b_sequence(0.1), 1000000);
  CHECK(rep.which_case == "B");
  CHECK(rep.cauchy);
  CHECK(rep.pass);
  CHECK(rep.lambda >= 1.0 / 1.1 - 1e-3);
  CHECK(rep.lambda <= 1.0 / 0.9 + 1e-3);
  CHECK(std::abs(rep.x_part) >= 0.1 / 1.1 - 1e-3);
  CHECK(std::abs(rep.x_part) <= 0.1 / 0.9 + 1e-3);
}

TEST_CASE("degenerate or indecisive sequences are refused") {
  DivergenceSequence dead;
  dead.delta = 0.1;
  dead.term = [](long) {
    SequenceTerm s;
    s.g = Mat2<double>::identity();
    return s;  // y = 0 kills c*y != 0
  };
  try {
    limit_region_check(dead, 1600);
    FAIL("expected the dead sequence to be refused");
  } catch (const Error& e) {
    CHECK(e.code() == "CaseUndetermined");
  }

  DivergenceSequence flip;
  flip.delta = 0.1;
  flip.term = [](long k) {
    SequenceTerm s;
    const double u = 1.0 / static_cast<double>(k);
    // dominance switches between the early and late samples
    s.g = Mat2<double>::shear_v(k < 1000 ? u : u * u * u);
    s.y = u * u;
    return s;
  };
  try {
    limit_region_check(flip, 6400);  // samples at 400, 1600, 6400
    FAIL("expected the indecisive sequence to be refused");
  } catch (const Error& e) {
    CHECK(e.code() == "CaseUndetermined");
  }

  try {
    limit_region_check(case_a_sequence(0.1), 8);
    FAIL("expected a short run to be refused");
  } catch (const Error& e) {
    CHECK(e.code() == "DomainError");
  }
}

TEST_CASE("conjugation by the diagonal rescales the unipotents") {
  CHECK(rescale_identity_check(rat(1), rat(3), rat(5)));  // trivial dilation
  CHECK(rescale_identity_check(rat(2), rat(3), rat(5)));  // u^12, x^10

  // the doubled dilation explicitly
  using M = Mat3<Rational>;
  const M a = M::dilate(rat(2));
  const M lhs = a * M::shear_u(rat(3)) * M::translate_x(rat(5)) * a.inverse();
  CHECK(lhs == M::shear_u(rat(12)) * M::translate_x(rat(10)));

  std::mt19937_64 rng(11);
  for (int i = 0; i < 100; ++i) {
    Rational e = random_rational(rng, 9, 9);
    if (e.sign() <= 0) e = rat(1) - e;  // keep the dilation positive
    CHECK(rescale_identity_check(e, random_rational(rng), random_rational(rng)));
  }

  std::uniform_real_distribution<double> tau(-2.0, 2.0), coef(-10.0, 10.0);
  for (int i = 0; i < 1000; ++i)
    CHECK(rescale_identity_check(tau(rng), coef(rng), coef(rng)));
}
