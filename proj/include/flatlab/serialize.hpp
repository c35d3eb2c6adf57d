#pragma once

#include <cstdint>
#include <string>

#include <nlohmann/json.hpp>

#include "flatlab/errors.hpp"
#include "flatlab/quadnum.hpp"
#include "flatlab/rational.hpp"

namespace flatlab {

using json = nlohmann::json;

// --- Rational <-> JSON -------------------------------------------------------
//
// A rational serializes as the pair [num, den].  Components are emitted as
// JSON integers when they fit in 64 bits and as decimal strings otherwise, so
// round-trips are exact at any precision.

inline json mpz_to_json(const mpz_class& z) {
  if (z.fits_slong_p()) return json(z.get_si());
  return json(z.get_str());
}

inline mpz_class mpz_from_json(const json& j) {
  try {
    if (j.is_number_integer()) return mpz_class(j.get<int64_t>());
    if (j.is_string()) return mpz_class(j.get<std::string>());
  } catch (const std::invalid_argument&) {
    // fall through to the ParseError below
  }
  fail("ParseError", "expected integer or integer string, got " + j.dump());
}

inline json to_json(const Rational& q) { return json::array({mpz_to_json(q.num()), mpz_to_json(q.den())}); }

inline Rational rational_from_json(const json& j) {
  if (j.is_number_integer()) return Rational(mpz_class(j.get<int64_t>()));
  if (j.is_array() && j.size() == 2) return Rational(mpz_from_json(j[0]), mpz_from_json(j[1]));
  fail("ParseError", "expected rational as integer or [num,den], got " + j.dump());
}

// --- QuadNum <-> JSON --------------------------------------------------------
//
// Field elements serialize as {"a": [num,den], "b": [num,den], "d": int}.
// Deserialization also accepts bare rationals for convenience.

inline json to_json(const QuadNum& x) {
  return json{{"a", to_json(x.a())}, {"b", to_json(x.b())}, {"d", x.d()}};
}

inline QuadNum quadnum_from_json(const json& j) {
  if (j.is_object()) {
    require(j.contains("a") && j.contains("b") && j.contains("d"), "ParseError",
            "field element object needs keys a, b, d: " + j.dump());
    Rational b = rational_from_json(j.at("b"));
    long d = j.at("d").get<long>();
    return QuadNum(rational_from_json(j.at("a")), b, b.is_zero() ? 0 : d);
  }
  return QuadNum(rational_from_json(j));
}

// Parses "p/q" or "p/q~r/s" (meaning p/q + (r/s)*sqrt(d)) as used by CLI
// arguments; d is supplied by the ambient surface.
inline QuadNum quadnum_parse(const std::string& s, long d) {
  auto tilde = s.find('~');
  if (tilde == std::string::npos) return QuadNum(Rational::parse(s));
  Rational b = Rational::parse(s.substr(tilde + 1));
  return QuadNum(Rational::parse(s.substr(0, tilde)), b, b.is_zero() ? 0 : d);
}

}  // namespace flatlab
