#include "vessiot/rational.hpp"

#include <boost/multiprecision/integer.hpp>

#include "vessiot/errors.hpp"

namespace vessiot {

namespace {

BigInt int_pow(BigInt b, unsigned long e) {
  BigInt r = 1;
  while (e) {
    if (e & 1) r *= b;
    b *= b;
    e >>= 1;
  }
  return r;
}

// Exact q-th root of n >= 0, if one exists.
std::optional<BigInt> exact_iroot(const BigInt& n, unsigned long q) {
  if (n == 0 || n == 1 || q == 1) return n;
  BigInt lo = 1, hi = n;
  while (lo <= hi) {
    BigInt mid = (lo + hi) / 2;
    BigInt p = int_pow(mid, q);
    if (p == n) return mid;
    if (p < n)
      lo = mid + 1;
    else
      hi = mid - 1;
  }
  return std::nullopt;
}

}  // namespace

Rational rational_pow_int(const Rational& q, long e) {
  if (e == 0) return Rational(1);
  if (q == 0) {
    if (e < 0) throw DomainError("zero raised to a negative power");
    return Rational(0);
  }
  bool neg = e < 0;
  unsigned long ae = neg ? static_cast<unsigned long>(-e) : static_cast<unsigned long>(e);
  BigInt num = int_pow(numerator(q), ae);
  BigInt den = int_pow(denominator(q), ae);
  if (!neg) return Rational(num, den);
  if (num < 0) return Rational(-den, -num);
  return Rational(den, num);
}

std::optional<Rational> rational_pow_exact(const Rational& q, const Rational& e) {
  if (is_integer(e)) {
    if (!fits_long(e)) return std::nullopt;
    return rational_pow_int(q, to_long(e));
  }
  if (q == 1) return Rational(1);
  if (q == 0) {
    if (e < 0) throw DomainError("zero raised to a negative power");
    return Rational(0);
  }
  BigInt en = numerator(e), ed = denominator(e);
  if (ed > 64 || en > 1024 || en < -1024) return std::nullopt;
  unsigned long root = ed.convert_to<unsigned long>();
  BigInt num = numerator(q), den = denominator(q);
  bool neg_base = num < 0;
  if (neg_base && root % 2 == 0) return std::nullopt;
  auto rn = exact_iroot(neg_base ? BigInt(-num) : num, root);
  auto rd = exact_iroot(den, root);
  if (!rn || !rd) return std::nullopt;
  Rational base(neg_base ? BigInt(-*rn) : *rn, *rd);
  return rational_pow_int(base, en.convert_to<long>());
}

Rational rational_content_gcd(const Rational& a, const Rational& b) {
  using boost::multiprecision::gcd;
  using boost::multiprecision::lcm;
  BigInt na = numerator(a) < 0 ? BigInt(-numerator(a)) : numerator(a);
  BigInt nb = numerator(b) < 0 ? BigInt(-numerator(b)) : numerator(b);
  if (na == 0) return Rational(nb, denominator(b));
  if (nb == 0) return Rational(na, denominator(a));
  return Rational(gcd(na, nb), lcm(denominator(a), denominator(b)));
}

std::string rational_str(const Rational& r) {
  if (is_integer(r)) return numerator(r).str();
  return numerator(r).str() + "/" + denominator(r).str();
}

}  // namespace vessiot
