#include "vessiot/expr.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "vessiot/errors.hpp"

namespace vessiot {

namespace {

const std::shared_ptr<const std::vector<Term>>& empty_terms() {
  static auto e = std::make_shared<const std::vector<Term>>();
  return e;
}

int cmp_rational(const Rational& a, const Rational& b) {
  if (a < b) return -1;
  if (b < a) return 1;
  return 0;
}

Rational term_degree(const Term& t) {
  Rational d = 0;
  for (const Factor& f : t.factors) d += f.exp;
  return d;
}

}  // namespace

Base Base::symbol(Symbol s) {
  Base b;
  b.tag = Tag::Sym;
  b.sym = s;
  return b;
}

Base Base::exp_atom(Expr a) {
  Base b;
  b.tag = Tag::Exp;
  b.arg = std::make_shared<const Expr>(std::move(a));
  return b;
}

Base Base::log_atom(Expr a) {
  Base b;
  b.tag = Tag::Log;
  b.arg = std::make_shared<const Expr>(std::move(a));
  return b;
}

Base Base::compound(Expr a) {
  Base b;
  b.tag = Tag::Cmp;
  b.arg = std::make_shared<const Expr>(std::move(a));
  return b;
}

int compare(const Base& a, const Base& b) {
  if (a.tag != b.tag) return a.tag < b.tag ? -1 : 1;
  if (a.tag == Base::Tag::Sym) {
    if (a.sym.id() != b.sym.id()) return a.sym.id() < b.sym.id() ? -1 : 1;
    return 0;
  }
  if (a.arg == b.arg) return 0;
  return compare(*a.arg, *b.arg);
}

int compare_monomial(const Term& a, const Term& b) {
  int dc = cmp_rational(term_degree(a), term_degree(b));
  if (dc != 0) return dc;
  size_t n = std::min(a.factors.size(), b.factors.size());
  for (size_t i = 0; i < n; ++i) {
    int c = compare(a.factors[i].base, b.factors[i].base);
    if (c != 0) return c;
    c = cmp_rational(a.factors[i].exp, b.factors[i].exp);
    if (c != 0) return c;
  }
  if (a.factors.size() != b.factors.size())
    return a.factors.size() < b.factors.size() ? -1 : 1;
  return 0;
}

int compare(const Expr& a, const Expr& b) {
  const auto& ta = a.terms();
  const auto& tb = b.terms();
  size_t n = std::min(ta.size(), tb.size());
  for (size_t i = 0; i < n; ++i) {
    int c = compare_monomial(ta[i], tb[i]);
    if (c != 0) return c;
    c = cmp_rational(ta[i].coeff, tb[i].coeff);
    if (c != 0) return c;
  }
  if (ta.size() != tb.size()) return ta.size() < tb.size() ? -1 : 1;
  return 0;
}

Expr::Expr() : terms_(empty_terms()) {}

Expr Expr::from_canonical(std::vector<Term> terms) {
  Expr e;
  if (!terms.empty())
    e.terms_ = std::make_shared<const std::vector<Term>>(std::move(terms));
  return e;
}

Expr Expr::from_int(long v) { return from_rational(Rational(v)); }

Expr Expr::from_rational(Rational q) {
  if (q == 0) return Expr();
  Term t;
  t.coeff = std::move(q);
  return from_canonical({std::move(t)});
}

Expr Expr::from_symbol(Symbol s) {
  Term t;
  t.coeff = 1;
  t.factors.push_back(Factor{Base::symbol(s), Rational(1)});
  return from_canonical({std::move(t)});
}

bool Expr::is_rational_const() const {
  return terms_->empty() || (terms_->size() == 1 && (*terms_)[0].factors.empty());
}

std::optional<Rational> Expr::rational_value() const {
  if (terms_->empty()) return Rational(0);
  if (terms_->size() == 1 && (*terms_)[0].factors.empty()) return (*terms_)[0].coeff;
  return std::nullopt;
}

namespace {

Expr make_sorted(std::vector<Term> terms) {
  std::sort(terms.begin(), terms.end(),
            [](const Term& a, const Term& b) { return compare_monomial(a, b) < 0; });
  std::vector<Term> out;
  out.reserve(terms.size());
  for (Term& t : terms) {
    if (t.coeff == 0) continue;
    if (!out.empty() && compare_monomial(out.back(), t) == 0) {
      out.back().coeff += t.coeff;
      if (out.back().coeff == 0) out.pop_back();
    } else {
      out.push_back(std::move(t));
    }
  }
  return Expr::from_canonical(std::move(out));
}

Expr normalize_product(Rational coeff, std::vector<Factor> raw);
Expr pow_expr(const Expr& b, const Rational& q);
Expr make_exp(const Expr& a);
Expr mul_expr(const Expr& a, const Expr& b);
Expr add_expr(const Expr& a, const Expr& b);

// content * sign pulled out so proportional compound bases canonicalize
// to the same representative.
std::pair<Rational, Expr> extract_content(const Expr& e) {
  const auto& ts = e.terms();
  if (ts.empty()) return {Rational(0), Expr()};
  Rational content = 0;
  for (const Term& t : ts) content = rational_content_gcd(content, t.coeff);
  if (ts[0].coeff < 0) content = -content;
  if (content == 1) return {content, e};
  std::vector<Term> out = ts;
  for (Term& t : out) t.coeff /= content;
  return {content, Expr::from_canonical(std::move(out))};
}

Expr add_expr(const Expr& a, const Expr& b) {
  if (a.is_zero_expr()) return b;
  if (b.is_zero_expr()) return a;
  const auto& ta = a.terms();
  const auto& tb = b.terms();
  std::vector<Term> out;
  out.reserve(ta.size() + tb.size());
  size_t i = 0, j = 0;
  while (i < ta.size() && j < tb.size()) {
    int c = compare_monomial(ta[i], tb[j]);
    if (c < 0) {
      out.push_back(ta[i++]);
    } else if (c > 0) {
      out.push_back(tb[j++]);
    } else {
      Term t = ta[i++];
      t.coeff += tb[j++].coeff;
      if (t.coeff != 0) out.push_back(std::move(t));
    }
  }
  for (; i < ta.size(); ++i) out.push_back(ta[i]);
  for (; j < tb.size(); ++j) out.push_back(tb[j]);
  return Expr::from_canonical(std::move(out));
}

Expr neg_expr(const Expr& a) {
  std::vector<Term> out = a.terms();
  for (Term& t : out) t.coeff = -t.coeff;
  return Expr::from_canonical(std::move(out));
}

Expr mul_term_term(const Term& a, const Term& b) {
  Rational c = a.coeff * b.coeff;
  if (c == 0) return Expr();
  std::vector<Factor> fs;
  fs.reserve(a.factors.size() + b.factors.size());
  fs.insert(fs.end(), a.factors.begin(), a.factors.end());
  fs.insert(fs.end(), b.factors.begin(), b.factors.end());
  return normalize_product(std::move(c), std::move(fs));
}

Expr mul_expr(const Expr& a, const Expr& b) {
  if (a.is_zero_expr() || b.is_zero_expr()) return Expr();
  if (auto q = a.rational_value()) {
    std::vector<Term> out = b.terms();
    for (Term& t : out) t.coeff *= *q;
    return Expr::from_canonical(std::move(out));
  }
  if (auto q = b.rational_value()) {
    std::vector<Term> out = a.terms();
    for (Term& t : out) t.coeff *= *q;
    return Expr::from_canonical(std::move(out));
  }
  std::vector<Expr> pieces;
  std::vector<Term> plain;
  for (const Term& ta : a.terms()) {
    for (const Term& tb : b.terms()) {
      Expr p = mul_term_term(ta, tb);
      if (p.terms().size() == 1) {
        plain.push_back(p.terms()[0]);
      } else if (!p.is_zero_expr()) {
        pieces.push_back(std::move(p));
      }
    }
  }
  Expr acc = make_sorted(std::move(plain));
  for (const Expr& p : pieces) acc = add_expr(acc, p);
  return acc;
}

// All exp factors of a monomial fold into a single exp with exponent one;
// rational multiples of logs inside the argument come back out as powers.
Expr make_exp(const Expr& a) {
  if (a.is_zero_expr()) return Expr::from_int(1);
  std::vector<Term> kept;
  std::vector<std::pair<Expr, Rational>> extracted;
  for (const Term& t : a.terms()) {
    if (t.factors.size() == 1 && t.factors[0].base.tag == Base::Tag::Log &&
        t.factors[0].exp == 1) {
      extracted.emplace_back(*t.factors[0].base.arg, t.coeff);
    } else {
      kept.push_back(t);
    }
  }
  Expr result = Expr::from_int(1);
  for (auto& [base, q] : extracted) result = mul_expr(result, pow_expr(base, q));
  if (!kept.empty()) {
    Term t;
    t.coeff = 1;
    t.factors.push_back(Factor{Base::exp_atom(Expr::from_canonical(std::move(kept))), Rational(1)});
    result = mul_expr(result, Expr::from_canonical({std::move(t)}));
  }
  return result;
}

Expr make_log(const Expr& a) {
  if (a.is_zero_expr()) throw DomainError("log of zero");
  if (auto q = a.rational_value()) {
    if (*q == 1) return Expr();
    Term t;
    t.coeff = 1;
    t.factors.push_back(Factor{Base::log_atom(a), Rational(1)});
    return Expr::from_canonical({std::move(t)});
  }
  if (a.terms().size() == 1) {
    const Term& t = a.terms()[0];
    if (t.coeff > 0) {
      Expr out = make_log(Expr::from_rational(t.coeff));
      for (const Factor& f : t.factors) {
        Expr piece;
        switch (f.base.tag) {
          case Base::Tag::Exp:
            piece = *f.base.arg;  // log(exp(s)) = s
            break;
          case Base::Tag::Sym: {
            Term lt;
            lt.coeff = 1;
            lt.factors.push_back(
                Factor{Base::log_atom(Expr::from_symbol(f.base.sym)), Rational(1)});
            piece = Expr::from_canonical({std::move(lt)});
            break;
          }
          default: {
            Term lt;
            lt.coeff = 1;
            lt.factors.push_back(Factor{Base::log_atom(*f.base.arg), Rational(1)});
            piece = Expr::from_canonical({std::move(lt)});
            break;
          }
        }
        out = add_expr(out, mul_expr(Expr::from_rational(f.exp), piece));
      }
      return out;
    }
    // negative leading coefficient: keep the atom whole
    Term lt;
    lt.coeff = 1;
    lt.factors.push_back(Factor{Base::log_atom(a), Rational(1)});
    return Expr::from_canonical({std::move(lt)});
  }
  auto [content, base] = extract_content(a);
  if (content != 1 && content > 0) {
    return add_expr(make_log(Expr::from_rational(content)), make_log(base));
  }
  Term lt;
  lt.coeff = 1;
  lt.factors.push_back(Factor{Base::log_atom(a), Rational(1)});
  return Expr::from_canonical({std::move(lt)});
}

Expr pow_expr(const Expr& b, const Rational& q) {
  if (q == 0) return Expr::from_int(1);
  if (q == 1) return b;
  if (b.is_zero_expr()) {
    if (q < 0) throw DomainError("zero raised to a negative power");
    return Expr();
  }
  if (auto c = b.rational_value()) {
    if (auto r = rational_pow_exact(*c, q)) return Expr::from_rational(*r);
    Term t;
    t.coeff = 1;
    t.factors.push_back(Factor{Base::compound(b), q});
    return Expr::from_canonical({std::move(t)});
  }
  if (b.terms().size() == 1) {
    // distribute over the monomial (generic-domain convention)
    const Term& t = b.terms()[0];
    Rational coeff = 1;
    std::vector<Factor> fs;
    if (t.coeff != 1) {
      if (auto r = rational_pow_exact(t.coeff, q)) {
        coeff = *r;
      } else {
        fs.push_back(Factor{Base::compound(Expr::from_rational(t.coeff)), q});
      }
    }
    for (const Factor& f : t.factors) fs.push_back(Factor{f.base, f.exp * q});
    return normalize_product(std::move(coeff), std::move(fs));
  }
  if (is_integer(q) && q > 0) {
    if (q > 64) throw UnsupportedExpression("sum raised to power larger than 64");
    long e = to_long(q);
    Expr acc = Expr::from_int(1);
    Expr sq = b;
    while (e) {
      if (e & 1) acc = mul_expr(acc, sq);
      e >>= 1;
      if (e) sq = mul_expr(sq, sq);
    }
    return acc;
  }
  auto [content, base] = extract_content(b);
  Rational coeff = 1;
  std::vector<Factor> fs;
  if (content != 1) {
    if (auto r = rational_pow_exact(content, q)) {
      coeff = *r;
    } else {
      fs.push_back(Factor{Base::compound(Expr::from_rational(content)), q});
    }
  }
  fs.push_back(Factor{Base::compound(base), q});
  return normalize_product(std::move(coeff), std::move(fs));
}

// True when no term is a plain rational multiple of a single log atom, i.e.
// make_exp would keep the argument unchanged.
bool exp_arg_is_reduced(const Expr& a) {
  for (const Term& t : a.terms()) {
    if (t.factors.size() == 1 && t.factors[0].base.tag == Base::Tag::Log &&
        t.factors[0].exp == 1)
      return false;
  }
  return true;
}

Expr normalize_product(Rational coeff, std::vector<Factor> raw) {
  if (coeff == 0) return Expr();
  std::sort(raw.begin(), raw.end(),
            [](const Factor& a, const Factor& b) { return compare(a.base, b.base) < 0; });
  std::vector<Factor> merged;
  merged.reserve(raw.size());
  for (Factor& f : raw) {
    if (f.exp == 0) continue;
    if (!merged.empty() && compare(merged.back().base, f.base) == 0) {
      merged.back().exp += f.exp;
      if (merged.back().exp == 0) merged.pop_back();
    } else {
      merged.push_back(std::move(f));
    }
  }

  int exp_count = 0;
  bool exp_plain = true;
  for (const Factor& f : merged) {
    if (f.base.tag == Base::Tag::Exp) {
      ++exp_count;
      if (f.exp != 1 || !exp_arg_is_reduced(*f.base.arg)) exp_plain = false;
    }
  }
  const bool fold_exp = exp_count > 1 || (exp_count == 1 && !exp_plain);

  Expr exp_arg;  // combined exponential argument
  std::vector<Expr> spill;
  std::vector<Factor> core;
  bool exp_seen = false;
  for (Factor& f : merged) {
    if (f.base.tag == Base::Tag::Exp && fold_exp) {
      exp_arg = add_expr(exp_arg, mul_expr(Expr::from_rational(f.exp), *f.base.arg));
      exp_seen = true;
    } else if (f.base.tag == Base::Tag::Cmp && is_integer(f.exp) && f.exp > 0) {
      spill.push_back(pow_expr(*f.base.arg, f.exp));
    } else if (f.base.tag == Base::Tag::Cmp && f.base.arg->is_rational_const()) {
      // constant base: retry exact powering (exponent may have changed)
      if (auto r = rational_pow_exact(*f.base.arg->rational_value(), f.exp)) {
        coeff *= *r;
      } else {
        core.push_back(std::move(f));
      }
    } else {
      core.push_back(std::move(f));
    }
  }

  Term t;
  t.coeff = std::move(coeff);
  t.factors = std::move(core);
  Expr result = Expr::from_canonical({std::move(t)});
  if (exp_seen && !exp_arg.is_zero_expr()) result = mul_expr(result, make_exp(exp_arg));
  for (const Expr& s : spill) result = mul_expr(result, s);
  return result;
}

}  // namespace

Expr operator+(const Expr& a, const Expr& b) { return add_expr(a, b); }
Expr operator-(const Expr& a, const Expr& b) { return add_expr(a, neg_expr(b)); }
Expr operator-(const Expr& a) { return neg_expr(a); }
Expr operator*(const Expr& a, const Expr& b) { return mul_expr(a, b); }
Expr operator/(const Expr& a, const Expr& b) {
  if (b.is_zero_expr()) throw DomainError("division by zero expression");
  return mul_expr(a, pow_expr(b, Rational(-1)));
}
Expr& operator+=(Expr& a, const Expr& b) { a = a + b; return a; }
Expr& operator-=(Expr& a, const Expr& b) { a = a - b; return a; }
Expr& operator*=(Expr& a, const Expr& b) { a = a * b; return a; }

Expr pow(const Expr& base, const Rational& e) { return pow_expr(base, e); }
Expr exp(const Expr& a) { return make_exp(a); }
Expr log(const Expr& a) { return make_log(a); }

Expr sum_all(std::vector<Expr> items) {
  if (items.empty()) return Expr();
  while (items.size() > 1) {
    std::vector<Expr> next;
    next.reserve(items.size() / 2 + 1);
    for (size_t i = 0; i + 1 < items.size(); i += 2)
      next.push_back(add_expr(items[i], items[i + 1]));
    if (items.size() % 2) next.push_back(items.back());
    items = std::move(next);
  }
  return items[0];
}

Expr simplify(const Expr& e) {
  std::vector<Expr> pieces;
  for (const Term& t : e.terms()) {
    Term copy = t;
    pieces.push_back(normalize_product(copy.coeff, std::move(copy.factors)));
  }
  return sum_all(std::move(pieces));
}

Expr diff(const Expr& e, Symbol v) {
  std::vector<Expr> pieces;
  for (const Term& t : e.terms()) {
    for (size_t i = 0; i < t.factors.size(); ++i) {
      const Factor& f = t.factors[i];
      Expr dfac;  // derivative of f alone
      switch (f.base.tag) {
        case Base::Tag::Sym: {
          Symbol s = f.base.sym;
          Expr inner;
          if (s == v) {
            inner = Expr::from_int(1);
          } else if ((s.kind() == SymbolKind::Unknown || s.kind() == SymbolKind::UnknownDeriv) &&
                     s.depends_on(v)) {
            inner = Expr::from_symbol(symbols::derivative(s, v));
          } else {
            continue;
          }
          dfac = Expr::from_rational(f.exp) *
                 pow_expr(Expr::from_symbol(s), f.exp - 1) * inner;
          break;
        }
        case Base::Tag::Exp: {
          Expr da = diff(*f.base.arg, v);
          if (da.is_zero_expr()) continue;
          Term et;
          et.coeff = 1;
          et.factors.push_back(f);
          dfac = da * Expr::from_canonical({std::move(et)});
          break;
        }
        case Base::Tag::Log: {
          Expr da = diff(*f.base.arg, v);
          if (da.is_zero_expr()) continue;
          Term lt;
          lt.coeff = 1;
          lt.factors.push_back(Factor{f.base, f.exp - 1});
          dfac = Expr::from_rational(f.exp) * Expr::from_canonical({std::move(lt)}) *
                 (da / *f.base.arg);
          break;
        }
        case Base::Tag::Cmp: {
          Expr da = diff(*f.base.arg, v);
          if (da.is_zero_expr()) continue;
          dfac = Expr::from_rational(f.exp) * pow_expr(*f.base.arg, f.exp - 1) * da;
          break;
        }
      }
      // multiply the remaining factors back in
      Rational c = t.coeff;
      std::vector<Factor> rest;
      rest.reserve(t.factors.size() - 1);
      for (size_t j = 0; j < t.factors.size(); ++j)
        if (j != i) rest.push_back(t.factors[j]);
      pieces.push_back(normalize_product(std::move(c), std::move(rest)) * dfac);
    }
  }
  return sum_all(std::move(pieces));
}

// ---- Substitution ----

void Substitution::set(Symbol key, Expr value) {
  if (map_.count(key.id())) {
    map_[key.id()] = std::move(value);
  } else {
    order_.push_back(key);
    map_.emplace(key.id(), std::move(value));
  }
  reduced_ = order_.size() <= 1;
}

bool Substitution::has(Symbol key) const { return map_.count(key.id()) != 0; }

const Expr* Substitution::find(Symbol key) const {
  auto it = map_.find(key.id());
  return it == map_.end() ? nullptr : &it->second;
}

namespace {

Expr substitute_map(const Expr& e, const std::map<uint32_t, Expr>& m);

Base substitute_base(const Base& b, const std::map<uint32_t, Expr>& m, bool& changed) {
  if (b.tag == Base::Tag::Sym) return b;
  Expr arg = substitute_map(*b.arg, m);
  if (compare(arg, *b.arg) == 0) return b;
  changed = true;
  Base nb;
  nb.tag = b.tag;
  nb.arg = std::make_shared<const Expr>(std::move(arg));
  return nb;
}

Expr substitute_map(const Expr& e, const std::map<uint32_t, Expr>& m) {
  std::vector<Expr> pieces;
  pieces.reserve(e.terms().size());
  for (const Term& t : e.terms()) {
    Expr piece = Expr::from_rational(t.coeff);
    for (const Factor& f : t.factors) {
      Expr fe;
      if (f.base.tag == Base::Tag::Sym) {
        Symbol s = f.base.sym;
        auto it = m.find(s.id());
        if (it != m.end()) {
          fe = pow_expr(it->second, f.exp);
        } else if (s.kind() == SymbolKind::UnknownDeriv) {
          auto bit = m.find(s.base_unknown().id());
          if (bit != m.end()) {
            Expr d = bit->second;
            for (Symbol c : s.derivative_coords()) d = diff(d, c);
            fe = pow_expr(d, f.exp);
          } else {
            Term ft;
            ft.coeff = 1;
            ft.factors.push_back(f);
            fe = Expr::from_canonical({std::move(ft)});
          }
        } else {
          Term ft;
          ft.coeff = 1;
          ft.factors.push_back(f);
          fe = Expr::from_canonical({std::move(ft)});
        }
      } else {
        bool changed = false;
        Base nb = substitute_base(f.base, m, changed);
        if (!changed) {
          Term ft;
          ft.coeff = 1;
          ft.factors.push_back(f);
          fe = Expr::from_canonical({std::move(ft)});
        } else {
          switch (nb.tag) {
            case Base::Tag::Exp:
              fe = pow_expr(make_exp(*nb.arg), f.exp);
              break;
            case Base::Tag::Log:
              fe = pow_expr(make_log(*nb.arg), f.exp);
              break;
            default:
              fe = pow_expr(*nb.arg, f.exp);
              break;
          }
        }
      }
      piece = piece * fe;
      if (piece.is_zero_expr()) break;
    }
    pieces.push_back(std::move(piece));
  }
  return sum_all(std::move(pieces));
}

}  // namespace

void Substitution::reduce() const {
  if (reduced_) return;
  std::map<uint32_t, Expr> done;
  for (Symbol k : order_) {
    Expr rhs = substitute_map(map_.at(k.id()), done);
    done[k.id()] = std::move(rhs);
  }
  map_ = std::move(done);
  reduced_ = true;
}

Expr Substitution::apply(const Expr& e) const {
  if (order_.empty()) return e;
  reduce();
  return substitute_map(e, map_);
}

Expr substitute(const Expr& e, const Substitution& s) { return s.apply(e); }

// ---- structural queries ----

namespace {

bool any_factor(const Expr& e, const std::function<bool(const Factor&)>& pred,
                bool recurse_atoms) {
  for (const Term& t : e.terms()) {
    for (const Factor& f : t.factors) {
      if (pred(f)) return true;
      if (recurse_atoms && f.base.tag != Base::Tag::Sym &&
          any_factor(*f.base.arg, pred, true))
        return true;
    }
  }
  return false;
}

}  // namespace

bool contains_symbol(const Expr& e, Symbol s) {
  return any_factor(
      e, [&](const Factor& f) { return f.base.tag == Base::Tag::Sym && f.base.sym == s; },
      true);
}

void collect_symbols(const Expr& e, std::set<uint32_t>& out) {
  for (const Term& t : e.terms()) {
    for (const Factor& f : t.factors) {
      if (f.base.tag == Base::Tag::Sym)
        out.insert(f.base.sym.id());
      else
        collect_symbols(*f.base.arg, out);
    }
  }
}

bool contains_transcendental(const Expr& e) {
  return any_factor(
      e,
      [&](const Factor& f) {
        return f.base.tag != Base::Tag::Sym || !is_integer(f.exp);
      },
      false);
}

void collect_singular_loci(const Expr& e, std::vector<Expr>& out) {
  auto push = [&out](const Expr& x) {
    for (const Expr& seen : out)
      if (compare(seen, x) == 0) return;
    out.push_back(x);
  };
  for (const Term& t : e.terms()) {
    for (const Factor& f : t.factors) {
      switch (f.base.tag) {
        case Base::Tag::Sym:
          if (f.exp < 0) push(Expr::from_symbol(f.base.sym));
          break;
        case Base::Tag::Log:
          push(*f.base.arg);
          collect_singular_loci(*f.base.arg, out);
          break;
        case Base::Tag::Cmp:
          if (f.exp < 0 || !is_integer(f.exp)) push(*f.base.arg);
          collect_singular_loci(*f.base.arg, out);
          break;
        case Base::Tag::Exp:
          collect_singular_loci(*f.base.arg, out);
          break;
      }
    }
  }
}

// ---- numeric evaluation ----

EvalResult evaluate_numeric(const Expr& e, const std::map<uint32_t, long double>& values) {
  EvalResult r;
  long double acc = 0;
  for (const Term& t : e.terms()) {
    long double tv = t.coeff.convert_to<long double>();
    for (const Factor& f : t.factors) {
      long double bv;
      switch (f.base.tag) {
        case Base::Tag::Sym: {
          auto it = values.find(f.base.sym.id());
          if (it == values.end()) {
            r.domain_error = true;
            return r;
          }
          bv = it->second;
          break;
        }
        case Base::Tag::Exp: {
          EvalResult a = evaluate_numeric(*f.base.arg, values);
          if (a.domain_error) return a;
          bv = expl(a.value);
          break;
        }
        case Base::Tag::Log: {
          EvalResult a = evaluate_numeric(*f.base.arg, values);
          if (a.domain_error) return a;
          if (a.value <= 0) {
            r.domain_error = true;
            return r;
          }
          bv = logl(a.value);
          break;
        }
        default: {
          EvalResult a = evaluate_numeric(*f.base.arg, values);
          if (a.domain_error) return a;
          bv = a.value;
          break;
        }
      }
      long double ev = f.exp.convert_to<long double>();
      if (bv == 0 && ev < 0) {
        r.domain_error = true;
        return r;
      }
      if (bv < 0 && !is_integer(f.exp)) {
        r.domain_error = true;
        return r;
      }
      long double pv = is_integer(f.exp) && fits_long(f.exp)
                           ? powl(bv, static_cast<long double>(to_long(f.exp)))
                           : powl(bv, ev);
      if (!std::isfinite(static_cast<double>(pv))) {
        r.domain_error = true;
        return r;
      }
      tv *= pv;
    }
    acc += tv;
  }
  r.value = acc;
  return r;
}

// ---- zero decision ----

Expr clear_denominators(const Expr& e) {
  Expr cur = e;
  for (int iter = 0; iter < 16; ++iter) {
    // most negative integer multiple needed per compound base
    std::vector<std::pair<Expr, long>> needed;
    for (const Term& t : cur.terms()) {
      for (const Factor& f : t.factors) {
        if (f.base.tag != Base::Tag::Cmp || f.exp >= 0) continue;
        Rational neg = -f.exp;
        long mult = fits_long(neg) ? to_long(neg)
                                   : (numerator(neg) / denominator(neg)).convert_to<long>() + 1;
        if (!is_integer(neg)) mult = (numerator(neg) / denominator(neg)).convert_to<long>() + 1;
        bool found = false;
        for (auto& [b, m] : needed) {
          if (compare(b, *f.base.arg) == 0) {
            m = std::max(m, mult);
            found = true;
            break;
          }
        }
        if (!found) needed.emplace_back(*f.base.arg, mult);
      }
    }
    if (needed.empty()) return cur;
    for (auto& [b, m] : needed) {
      Term t;
      t.coeff = 1;
      t.factors.push_back(Factor{Base::compound(b), Rational(m)});
      // multiply without expanding the positive power against itself:
      // normalize_product will cancel against the negative exponents and
      // expand whatever remains.
      cur = mul_expr(cur, Expr::from_canonical({std::move(t)}));
    }
  }
  return cur;
}

ZeroResult check_zero(const Expr& e, const SampleOptions& opts) {
  if (e.is_zero_expr()) return {true, false};
  Expr cleared = clear_denominators(e);
  if (cleared.is_zero_expr()) return {true, false};
  if (!contains_transcendental(cleared)) return {false, false};

  std::set<uint32_t> syms;
  collect_symbols(e, syms);
  std::mt19937_64 rng(opts.seed);
  std::uniform_real_distribution<double> dist(opts.low, opts.high);
  int successes = 0;
  bool all_small = true;
  int max_trials = opts.points * 8;
  for (int trial = 0; trial < max_trials && successes < opts.points; ++trial) {
    std::map<uint32_t, long double> vals;
    for (uint32_t id : syms) vals[id] = dist(rng);
    EvalResult r = evaluate_numeric(e, vals);
    if (r.domain_error) continue;
    ++successes;
    if (fabsl(r.value) > opts.tolerance) all_small = false;
  }
  if (successes == 0)
    throw InconclusiveZeroTest("numeric zero test: every sample point was singular");
  return {all_small, true};
}

bool is_zero(const Expr& e, const SampleOptions& opts) { return check_zero(e, opts).zero; }

bool is_structurally_nonzero(const Expr& e) {
  if (e.is_zero_expr()) return false;
  if (e.terms().size() != 1) {
    ZeroResult z = check_zero(e);
    return !z.zero;
  }
  const Term& t = e.terms()[0];
  for (const Factor& f : t.factors) {
    if (f.base.tag == Base::Tag::Sym) {
      SymbolKind k = f.base.sym.kind();
      if (k == SymbolKind::Parameter && !f.base.sym.declared_nonzero() && f.exp > 0)
        return false;
      if ((k == SymbolKind::Coordinate || k == SymbolKind::Unknown ||
           k == SymbolKind::UnknownDeriv) &&
          f.exp > 0)
        return false;  // vanishes where the coordinate/function does
    } else if (f.base.tag != Base::Tag::Exp && f.exp > 0) {
      return false;
    }
  }
  return true;
}

// ---- linear structure ----

LinearView collect_linear(const Expr& e, const std::set<uint32_t>& unknowns) {
  LinearView lv;
  for (const Term& t : e.terms()) {
    int hits = 0;
    uint32_t which = 0;
    for (const Factor& f : t.factors) {
      if (f.base.tag == Base::Tag::Sym) {
        Symbol s = f.base.sym;
        if (unknowns.count(s.id())) {
          if (f.exp != 1) throw NonlinearSystem("unknown '" + s.name() + "' at degree " +
                                                rational_str(f.exp));
          ++hits;
          which = s.id();
        } else if (s.kind() == SymbolKind::UnknownDeriv &&
                   unknowns.count(s.base_unknown().id())) {
          throw NonlinearSystem("derivative of unknown '" + s.base_unknown().name() +
                                "' appears in an algebraic equation");
        }
      } else {
        if (depends_on_any(*f.base.arg, unknowns))
          throw NonlinearSystem("unknown appears inside a transcendental atom");
      }
    }
    if (hits == 0) {
      lv.rest = lv.rest + Expr::from_canonical({t});
    } else if (hits == 1) {
      Term rest = t;
      std::vector<Factor> fs;
      for (const Factor& f : rest.factors)
        if (!(f.base.tag == Base::Tag::Sym && f.base.sym.id() == which)) fs.push_back(f);
      rest.factors = std::move(fs);
      Expr coeff = Expr::from_canonical({std::move(rest)});
      auto it = lv.coeffs.find(which);
      if (it == lv.coeffs.end())
        lv.coeffs.emplace(which, std::move(coeff));
      else
        it->second = it->second + coeff;
    } else {
      throw NonlinearSystem("product of unknowns in equation");
    }
  }
  for (auto it = lv.coeffs.begin(); it != lv.coeffs.end();) {
    if (it->second.is_zero_expr())
      it = lv.coeffs.erase(it);
    else
      ++it;
  }
  return lv;
}

bool depends_on_any(const Expr& e, const std::set<uint32_t>& ids) {
  return any_factor(
      e,
      [&](const Factor& f) {
        if (f.base.tag != Base::Tag::Sym) return false;
        if (ids.count(f.base.sym.id())) return true;
        if (f.base.sym.kind() == SymbolKind::UnknownDeriv &&
            ids.count(f.base.sym.base_unknown().id()))
          return true;
        return false;
      },
      true);
}

// ---- rendering ----

std::string to_string(const Rational& q) { return rational_str(q); }

namespace {

void render_term(std::ostringstream& os, const Term& t, bool leading);

void render_base(std::ostringstream& os, const Base& b) {
  switch (b.tag) {
    case Base::Tag::Sym:
      os << b.sym.name();
      break;
    case Base::Tag::Exp:
      os << "exp(" << to_string(*b.arg) << ")";
      break;
    case Base::Tag::Log:
      os << "log(" << to_string(*b.arg) << ")";
      break;
    case Base::Tag::Cmp:
      os << "(" << to_string(*b.arg) << ")";
      break;
  }
}

void render_term(std::ostringstream& os, const Term& t, bool leading) {
  Rational c = t.coeff;
  if (c < 0) {
    os << (leading ? "-" : " - ");
    c = -c;
  } else if (!leading) {
    os << " + ";
  }
  bool printed = false;
  if (c != 1 || t.factors.empty()) {
    if (is_integer(c))
      os << rational_str(c);
    else
      os << "(" << rational_str(c) << ")";
    printed = true;
  }
  for (const Factor& f : t.factors) {
    if (printed) os << "*";
    render_base(os, f.base);
    if (f.exp != 1) {
      if (is_integer(f.exp) && f.exp > 0)
        os << "^" << rational_str(f.exp);
      else
        os << "^(" << rational_str(f.exp) << ")";
    }
    printed = true;
  }
}

}  // namespace

std::string to_string(const Expr& e) {
  if (e.is_zero_expr()) return "0";
  std::ostringstream os;
  bool leading = true;
  for (const Term& t : e.terms()) {
    render_term(os, t, leading);
    leading = false;
  }
  return os.str();
}

}  // namespace vessiot
