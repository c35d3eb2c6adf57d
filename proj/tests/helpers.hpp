#pragma once

#include <random>

#include "flatlab/quadnum.hpp"
#include "flatlab/rational.hpp"

namespace flatlab::testing {

// Deterministic generators used across the suite; every test fixes its seed.
inline Rational random_rational(std::mt19937_64& rng, long max_abs = 50, long max_den = 20) {
  std::uniform_int_distribution<long> num(-max_abs, max_abs);
  std::uniform_int_distribution<long> den(1, max_den);
  return Rational(num(rng), den(rng));
}

inline QuadNum random_quadnum(std::mt19937_64& rng, long d, long max_abs = 50, long max_den = 20) {
  return QuadNum(random_rational(rng, max_abs, max_den), random_rational(rng, max_abs, max_den), d);
}

inline QuadNum random_nonzero_quadnum(std::mt19937_64& rng, long d, long max_abs = 50) {
  for (;;) {
    QuadNum x = random_quadnum(rng, d, max_abs);
    if (!x.is_zero()) return x;
  }
}

}  // namespace flatlab::testing
