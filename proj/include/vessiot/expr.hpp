#ifndef VESSIOT_EXPR_HPP
#define VESSIOT_EXPR_HPP

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "vessiot/rational.hpp"
#include "vessiot/symbol.hpp"

namespace vessiot {

class Expr;

// A multiplicative base: a symbol, exp(arg), log(arg), or an opaque compound
// expression raised to a non-natural rational power.
struct Base {
  enum class Tag : uint8_t { Sym, Exp, Log, Cmp };
  Tag tag = Tag::Sym;
  Symbol sym;
  std::shared_ptr<const Expr> arg;

  static Base symbol(Symbol s);
  static Base exp_atom(Expr a);
  static Base log_atom(Expr a);
  static Base compound(Expr a);
};

struct Factor {
  Base base;
  Rational exp;
};

struct Term {
  Rational coeff;
  std::vector<Factor> factors;
};

int compare(const Base& a, const Base& b);
int compare_monomial(const Term& a, const Term& b);
int compare(const Expr& a, const Expr& b);

// Canonical sum of terms. Immutable; copies share storage.
class Expr {
 public:
  Expr();  // zero
  static Expr from_int(long v);
  static Expr from_rational(Rational q);
  static Expr from_symbol(Symbol s);
  // Internal: terms must already be canonical.
  static Expr from_canonical(std::vector<Term> terms);

  const std::vector<Term>& terms() const { return *terms_; }
  bool is_zero_expr() const { return terms_->empty(); }
  bool is_rational_const() const;
  std::optional<Rational> rational_value() const;

  bool operator==(const Expr& o) const { return compare(*this, o) == 0; }
  bool operator!=(const Expr& o) const { return compare(*this, o) != 0; }

 private:
  std::shared_ptr<const std::vector<Term>> terms_;
};

Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator-(const Expr& a);
Expr operator*(const Expr& a, const Expr& b);
Expr operator/(const Expr& a, const Expr& b);  // exact field division
Expr& operator+=(Expr& a, const Expr& b);
Expr& operator-=(Expr& a, const Expr& b);
Expr& operator*=(Expr& a, const Expr& b);

Expr pow(const Expr& base, const Rational& e);
Expr exp(const Expr& a);
Expr log(const Expr& a);

// Sums a list with balanced reduction (cheaper than left fold on long lists).
Expr sum_all(std::vector<Expr> items);

// Re-canonicalizes. Construction already canonicalizes, so this is the
// identity on well-formed values; kept as the public simplify entry point.
Expr simplify(const Expr& e);

Expr diff(const Expr& e, Symbol v);

// Ordered triangular substitution (symbols and unknown functions to
// expressions). Derivative symbols of substituted unknowns chain-rule into
// derivatives of the replacement.
class Substitution {
 public:
  Substitution() = default;
  void set(Symbol key, Expr value);
  bool has(Symbol key) const;
  const Expr* find(Symbol key) const;
  size_t size() const { return order_.size(); }
  const std::vector<Symbol>& keys() const { return order_; }

  Expr apply(const Expr& e) const;

 private:
  void reduce() const;
  std::vector<Symbol> order_;
  mutable std::map<uint32_t, Expr> map_;
  mutable bool reduced_ = true;
};

Expr substitute(const Expr& e, const Substitution& s);

// ---- structural queries ----

bool contains_symbol(const Expr& e, Symbol s);
void collect_symbols(const Expr& e, std::set<uint32_t>& out);
bool contains_transcendental(const Expr& e);
// Sub-expressions whose vanishing makes the value singular: compound bases
// with negative or fractional exponent, log arguments.
void collect_singular_loci(const Expr& e, std::vector<Expr>& out);

// ---- zero decision ----

struct SampleOptions {
  int points = 20;
  double tolerance = 1e-10;
  unsigned seed = 0x5eed;
  double low = 0.25;
  double high = 2.25;
};

struct ZeroResult {
  bool zero = false;
  bool probabilistic = false;  // decided by sampling, not canonical form
};

ZeroResult check_zero(const Expr& e, const SampleOptions& opts = {});
bool is_zero(const Expr& e, const SampleOptions& opts = {});

// Multiplies out every compound denominator; zero iff original is zero
// (denominators are assumed nonvanishing on the generic locus).
Expr clear_denominators(const Expr& e);

// True when the term structure rules out vanishing on the generic domain:
// a single term whose symbol factors are declared nonzero or are unknowns
// treated as generic.
bool is_structurally_nonzero(const Expr& e);

// ---- numeric evaluation ----

struct EvalResult {
  long double value = 0;
  bool domain_error = false;
};

EvalResult evaluate_numeric(const Expr& e, const std::map<uint32_t, long double>& values);

// ---- linear structure ----

struct LinearView {
  std::map<uint32_t, Expr> coeffs;  // unknown id -> coefficient
  Expr rest;
};

// Throws NonlinearSystem when any unknown appears at degree >= 2, inside an
// atom, multiplied by another unknown, or under a formal derivative.
LinearView collect_linear(const Expr& e, const std::set<uint32_t>& unknowns);

bool depends_on_any(const Expr& e, const std::set<uint32_t>& ids);

// ---- rendering ----

std::string to_string(const Expr& e);
std::string to_string(const Rational& q);

}  // namespace vessiot

#endif
