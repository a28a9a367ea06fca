#ifndef VESSIOT_RATIONAL_HPP
#define VESSIOT_RATIONAL_HPP

#include <boost/multiprecision/cpp_int.hpp>

#include <optional>
#include <string>

namespace vessiot {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

inline bool is_integer(const Rational& r) { return denominator(r) == 1; }

inline bool fits_long(const Rational& r) {
  return is_integer(r) && numerator(r) >= -1000000000 && numerator(r) <= 1000000000;
}

inline long to_long(const Rational& r) { return numerator(r).convert_to<long>(); }

// q^e for integer e (e may be negative; q must be nonzero then).
Rational rational_pow_int(const Rational& q, long e);

// Exact rational result of q^(num/den) if one exists.
std::optional<Rational> rational_pow_exact(const Rational& q, const Rational& e);

// gcd(|a|,|b|) over Q: gcd of numerators / lcm of denominators.
Rational rational_content_gcd(const Rational& a, const Rational& b);

std::string rational_str(const Rational& r);

}  // namespace vessiot

#endif
