#include "vessiot/antideriv.hpp"

#include "vessiot/errors.hpp"

namespace vessiot {

namespace {

bool factor_mentions(const Factor& f, Symbol v) {
  if (f.base.tag == Base::Tag::Sym) return f.base.sym == v;
  return contains_symbol(*f.base.arg, v);
}

// arg = slope * v + intercept with slope free of v; nullopt otherwise.
std::optional<Expr> linear_slope(const Expr& arg, Symbol v) {
  Expr s = diff(arg, v);
  if (s.is_zero_expr()) return std::nullopt;
  if (contains_symbol(s, v)) return std::nullopt;
  return s;
}

Expr factorial(long n) {
  Rational r = 1;
  for (long i = 2; i <= n; ++i) r *= i;
  return Expr::from_rational(r);
}

Expr integrate_term(const Term& t, Symbol v) {
  Expr rest = Expr::from_rational(t.coeff);
  std::vector<Factor> dep;
  for (const Factor& f : t.factors) {
    if (factor_mentions(f, v)) {
      dep.push_back(f);
    } else {
      Term rt;
      rt.coeff = 1;
      rt.factors.push_back(f);
      rest = rest * Expr::from_canonical({std::move(rt)});
    }
  }
  Expr vx = Expr::from_symbol(v);

  if (dep.empty()) return rest * vx;

  if (dep.size() == 1) {
    const Factor& f = dep[0];
    switch (f.base.tag) {
      case Base::Tag::Sym: {  // c * v^q
        if (f.exp == -1) return rest * log(vx);
        return rest * pow(vx, f.exp + 1) / Expr::from_rational(f.exp + 1);
      }
      case Base::Tag::Cmp: {  // c * (a*v + b)^q
        auto slope = linear_slope(*f.base.arg, v);
        if (!slope) break;
        if (f.exp == -1) return rest * log(*f.base.arg) / *slope;
        return rest * pow(*f.base.arg, f.exp + 1) /
               (Expr::from_rational(f.exp + 1) * *slope);
      }
      case Base::Tag::Exp: {  // c * exp(k*v + m)
        auto slope = linear_slope(*f.base.arg, v);
        if (!slope) break;
        Term et;
        et.coeff = 1;
        et.factors.push_back(f);
        return rest * Expr::from_canonical({std::move(et)}) / *slope;
      }
      default:
        break;
    }
  }

  if (dep.size() == 2) {
    // polynomial * exponential: v^n * exp(k*v + m)
    const Factor* pf = nullptr;
    const Factor* ef = nullptr;
    for (const Factor& f : dep) {
      if (f.base.tag == Base::Tag::Sym && f.base.sym == v && is_integer(f.exp) && f.exp > 0)
        pf = &f;
      if (f.base.tag == Base::Tag::Exp) ef = &f;
    }
    if (pf && ef) {
      auto slope = linear_slope(*ef->base.arg, v);
      if (slope && !contains_symbol(*slope, v)) {
        long n = to_long(pf->exp);
        if (n <= 64) {
          Term et;
          et.coeff = 1;
          et.factors.push_back(*ef);
          Expr expf = Expr::from_canonical({std::move(et)});
          Expr nf = factorial(n);
          Expr acc;
          Expr sign = Expr::from_int(1);
          for (long i = 0; i <= n; ++i) {
            // (-1)^i * n!/(n-i)! * v^(n-i) / k^(i+1)
            Expr piece = sign * nf / factorial(n - i) * pow(vx, Rational(n - i)) /
                         pow(*slope, Rational(i + 1));
            acc = acc + piece;
            sign = -sign;
          }
          return rest * expf * acc;
        }
      }
    }
  }

  Term bad;
  bad.coeff = t.coeff;
  bad.factors = dep;
  throw OutsideQuadratureClass("no antiderivative rule for " +
                               to_string(Expr::from_canonical({std::move(bad)})) + " in " +
                               v.name());
}

}  // namespace

Expr antiderivative(const Expr& e, Symbol v) {
  std::vector<Expr> pieces;
  for (const Term& t : e.terms()) pieces.push_back(integrate_term(t, v));
  return sum_all(std::move(pieces));
}

}  // namespace vessiot
