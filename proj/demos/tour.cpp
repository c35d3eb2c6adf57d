// A short tour of the exact machinery: build the named surfaces, read off
// their strata and areas, decompose the horizontal direction into cylinders,
// and run the eigenform-locus membership test on two staircase tables.
//
// Everything printed here is computed in exact arithmetic over Q(sqrt d);
// doubles appear only when a value is formatted for display.

#include <cstdio>

#include "flatlab/constructions.hpp"
#include "flatlab/cylinders.hpp"
#include "flatlab/surface.hpp"

using namespace flatlab;

namespace {

void describe(const ExactSurface& s) {
  const Stratum st = stratum(s);
  std::printf("%-18s %-8s area = %-14s cone angles:", s.label.c_str(),
              st.name().c_str(), total_area(s).str().c_str());
  for (const ConePoint& p : cone_data(s).points)
    std::printf(" %d*pi", 2 * p.multiple);
  std::printf("\n");
}

void membership(const char* tag, const ExactSurface& s) {
  const CylinderDecomposition dec =
      periodic_direction_decompose(s, {QuadNum(1), QuadNum(0)});
  std::printf("%s: %zu horizontal cylinders (w, h, twist):\n", tag,
              dec.cylinders.size());
  for (const Cylinder& c : dec.cylinders)
    std::printf("    (%s, %s, %s)\n", c.w.str().c_str(), c.h.str().c_str(),
                c.t.str().c_str());
  const LmVerdict v = check_lm(normalize_params(dec));
  if (v.member)
    std::printf("  member of the locus, certificate m = %s\n\n",
                v.m.str().c_str());
  else
    std::printf("  not a member: %s fails with residual %s\n\n",
                v.equation.c_str(), v.residual.str().c_str());
}

}  // namespace

int main() {
  std::printf("named examples\n--------------\n");
  describe(regular_octagon());
  describe(normalized_decagon());
  describe(decagon_staircase());
  describe(l_table(QuadNum(2), QuadNum(2)));
  describe(slit_tori(QuadNum(1), QuadNum(2), QuadNum(Rational(1, 3))));
  describe(square_torus());

  std::printf("\nmembership tests\n----------------\n");
  // The golden staircase is cut from the regular decagon and lives in the
  // locus with certificate m = 5.
  membership("golden staircase", decagon_staircase());

  // A sqrt-2 table on the locus...
  const QuadNum r2 = QuadNum::sqrt_of(2);
  membership("sqrt-2 table",
             z_table(QuadNum(1), r2, r2 - QuadNum(Rational(1, 4)),
                     QuadNum(Rational(3, 4)), QuadNum(Rational(1, 4)),
                     QuadNum(0), QuadNum(0), QuadNum(0)));

  // ...and the same table with one height nudged by a thousandth, which the
  // exact equations reject with a nonzero residual.
  membership("nudged table",
             z_table(QuadNum(1), r2, r2 - QuadNum(Rational(1, 4)),
                     QuadNum(Rational(3, 4)) + QuadNum(Rational(1, 1000)),
                     QuadNum(Rational(1, 4)), QuadNum(0), QuadNum(0),
                     QuadNum(0)));
  return 0;
}
