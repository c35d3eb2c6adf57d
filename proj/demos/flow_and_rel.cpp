// Flow-side demo: average the truncated systole along the horizontal shear
// on the golden staircase, displace a cone class until the surface
// degenerates, and renormalize one divergent affine sequence.

#include <cstdio>

#include "flatlab/constructions.hpp"
#include "flatlab/divergence.hpp"
#include "flatlab/ergodic.hpp"
#include "flatlab/rel.hpp"

using namespace flatlab;

int main() {
  // Birkhoff-style averages along the shear, with a-posteriori error
  // estimates from step halving.  The value settles as T grows.
  const ExactSurface stair = decagon_staircase();
  const Observable sys = truncated_systole(2.0);
  std::printf("averages of %s along the shear flow\n", sys.name.c_str());
  std::printf("%6s  %-20s %-12s\n", "T", "value", "error estimate");
  for (long T : {2, 8, 32}) {
    const QuadratureResult r =
        average_A_U(sys, stair, Rational(T), Rational(1, 8));
    std::printf("%6ld  %-20.12f %-12.3e\n", T, r.value, r.err);
  }

  // Sliding one cone class of a slit pair of tori.  One direction closes
  // the slit and pinches the surface into a wedge of tori; the other slides
  // until the moving point has wrapped the narrow torus and the surface
  // collapses into a step table.  Displacements that would push a collision
  // into the interior are refused.
  const ExactSurface slit =
      slit_tori(QuadNum(1), QuadNum(2), QuadNum(Rational(1, 3)));
  std::printf("\nsliding a cone class of %s\n", slit.label.c_str());
  for (const Rational& step : {Rational(1, 3), Rational(2, 3)}) {
    for (int cls : {0, 1}) {
      try {
        const RelOutcome out =
            rel_translate(slit, cls, {QuadNum(step), QuadNum(0)});
        if (out.degenerate)
          std::printf("  class %d by %s: degenerates (%s), %zu component(s)\n",
                      cls, step.str().c_str(), out.kind.c_str(),
                      out.components.size());
        else
          std::printf("  class %d by %s: stays in %s, area %s\n", cls,
                      step.str().c_str(), stratum(out.surface).name().c_str(),
                      total_area(out.surface).str().c_str());
      } catch (const Error& e) {
        std::printf("  class %d by %s: refused (%s)\n", cls, step.str().c_str(),
                    e.what());
      }
    }
  }

  // A sequence g_k x_k y_k -> id escapes to infinity under conjugation by
  // u^{t_k}; the compensated products accumulate on a bounded limit set.
  std::printf("\nrenormalized divergence, group part dominant\n");
  const DivergenceSequence seq = case_a_sequence(0.1, 1.0, 0.5);
  const LimitReport rep = limit_region_check(seq, 1000000);
  std::printf("  case %s: accumulation at diag(%.6f, %.6f), x = %.6f\n",
              rep.which_case.c_str(), rep.lambda, rep.mu, rep.x_part);
  std::printf("  distance to the advertised limit set: %.2e (%s)\n",
              rep.distance, rep.pass ? "inside" : "outside");
  return 0;
}
