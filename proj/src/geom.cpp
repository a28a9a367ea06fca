#include "vessiot/geom.hpp"

#include <algorithm>
#include <sstream>

#include "vessiot/errors.hpp"
#include "vessiot/parallel.hpp"

namespace vessiot {

Chart::Chart(std::vector<Symbol> coords) : coords_(std::move(coords)) {
  if (coords_.size() > 250) throw Error("chart dimension limit exceeded");
  for (size_t i = 0; i < coords_.size(); ++i) {
    auto [it, fresh] = index_.emplace(coords_[i].id(), static_cast<int>(i));
    if (!fresh) throw Error("duplicate coordinate '" + coords_[i].name() + "' in chart");
  }
}

int Chart::index_of(Symbol s) const {
  auto it = index_.find(s.id());
  return it == index_.end() ? -1 : it->second;
}

// Degrees above the chart dimension are allowed and always hold the zero form.
Form::Form(ChartPtr chart, int degree) : chart_(std::move(chart)), degree_(degree) {
  if (degree_ < 0) throw Error("negative form degree");
}

Form Form::scalar(ChartPtr chart, Expr e) {
  Form f(std::move(chart), 0);
  f.add_to({}, std::move(e));
  return f;
}

Form Form::d_coord(ChartPtr chart, Symbol s) {
  int idx = chart->index_of(s);
  if (idx < 0) throw Error("d of non-chart coordinate '" + s.name() + "'");
  Form f(std::move(chart), 1);
  f.add_to({static_cast<uint8_t>(idx)}, Expr::from_int(1));
  return f;
}

void Form::add_to(const Tuple& t, const Expr& e) {
  if (static_cast<int>(t.size()) != degree_) throw Error("tuple size does not match degree");
  if (degree_ > static_cast<int>(chart_->dim())) return;
  if (e.is_zero_expr()) return;
  auto it = coeffs_.find(t);
  if (it == coeffs_.end()) {
    coeffs_.emplace(t, e);
  } else {
    it->second = it->second + e;
    if (it->second.is_zero_expr()) coeffs_.erase(it);
  }
}

Expr Form::coeff(const Tuple& t) const {
  auto it = coeffs_.find(t);
  return it == coeffs_.end() ? Expr() : it->second;
}

void VectorField::set(Symbol coord, Expr e) {
  int idx = chart_->index_of(coord);
  if (idx < 0) throw Error("vector field component on non-chart coordinate '" + coord.name() + "'");
  if (e.is_zero_expr())
    comps_.erase(idx);
  else
    comps_[idx] = std::move(e);
}

Expr VectorField::component(Symbol coord) const {
  int idx = chart_->index_of(coord);
  if (idx < 0) return Expr();
  auto it = comps_.find(idx);
  return it == comps_.end() ? Expr() : it->second;
}

namespace {

void require_same_chart(const ChartPtr& a, const ChartPtr& b) {
  if (a.get() != b.get()) throw ChartMismatch("operands live on different charts");
}

// Merge strictly increasing tuples; returns parity sign or 0 on collision.
int merge_tuples(const Tuple& a, const Tuple& b, Tuple& out) {
  out.clear();
  out.reserve(a.size() + b.size());
  size_t i = 0, j = 0;
  int inversions = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] == b[j]) return 0;
    if (a[i] < b[j]) {
      out.push_back(a[i++]);
    } else {
      inversions += static_cast<int>(a.size() - i);
      out.push_back(b[j++]);
    }
  }
  while (i < a.size()) out.push_back(a[i++]);
  while (j < b.size()) out.push_back(b[j++]);
  return inversions % 2 == 0 ? 1 : -1;
}

}  // namespace

Form operator+(const Form& a, const Form& b) {
  require_same_chart(a.chart(), b.chart());
  if (a.degree() != b.degree()) throw Error("sum of forms of different degree");
  Form out = a;
  for (const auto& [t, e] : b.coeffs()) out.add_to(t, e);
  return out;
}

Form operator-(const Form& a, const Form& b) { return a + (-b); }

Form operator-(const Form& a) {
  Form out(a.chart(), a.degree());
  for (const auto& [t, e] : a.coeffs()) out.add_to(t, -e);
  return out;
}

Form operator*(const Expr& s, const Form& a) {
  Form out(a.chart(), a.degree());
  for (const auto& [t, e] : a.coeffs()) out.add_to(t, s * e);
  return out;
}

Form operator/(const Form& a, const Expr& s) {
  Form out(a.chart(), a.degree());
  for (const auto& [t, e] : a.coeffs()) out.add_to(t, e / s);
  return out;
}

Form wedge_serial(const Form& a, const Form& b) {
  require_same_chart(a.chart(), b.chart());
  int deg = a.degree() + b.degree();
  if (deg > static_cast<int>(a.chart()->dim())) return Form(a.chart(), deg);
  Form out(a.chart(), deg);
  Tuple merged;
  for (const auto& [ta, ea] : a.coeffs()) {
    for (const auto& [tb, eb] : b.coeffs()) {
      int sign = merge_tuples(ta, tb, merged);
      if (sign == 0) continue;
      Expr c = ea * eb;
      if (sign < 0) c = -c;
      out.add_to(merged, c);
    }
  }
  return out;
}

Form wedge(const Form& a, const Form& b) {
  require_same_chart(a.chart(), b.chart());
  int deg = a.degree() + b.degree();
  if (deg > static_cast<int>(a.chart()->dim())) return Form(a.chart(), deg);
  size_t na = a.coeffs().size();
  if (!parallel_enabled() || na * b.coeffs().size() < 64) return wedge_serial(a, b);

  std::vector<const std::pair<const Tuple, Expr>*> rows;
  rows.reserve(na);
  for (const auto& kv : a.coeffs()) rows.push_back(&kv);
  std::vector<std::map<Tuple, Expr>> partial(rows.size());
  parallel_for_index(rows.size(), [&](size_t i) {
    Tuple merged;
    auto& local = partial[i];
    for (const auto& [tb, eb] : b.coeffs()) {
      int sign = merge_tuples(rows[i]->first, tb, merged);
      if (sign == 0) continue;
      Expr c = rows[i]->second * eb;
      if (sign < 0) c = -c;
      auto it = local.find(merged);
      if (it == local.end())
        local.emplace(merged, std::move(c));
      else
        it->second = it->second + c;
    }
  });
  Form out(a.chart(), deg);
  for (auto& m : partial)
    for (auto& [t, e] : m) out.add_to(t, e);
  return out;
}

Form multi_wedge(std::span<const Form> forms) {
  if (forms.empty()) throw Error("multi_wedge of empty list");
  Form acc = forms[0];
  for (size_t i = 1; i < forms.size(); ++i) acc = wedge(acc, forms[i]);
  return acc;
}

Form ext_d_serial(const Form& a) {
  const Chart& ch = *a.chart();
  Form out(a.chart(), a.degree() + 1);
  if (a.degree() + 1 > static_cast<int>(ch.dim())) return out;
  for (const auto& [t, e] : a.coeffs()) {
    for (size_t v = 0; v < ch.dim(); ++v) {
      Expr de = diff(e, ch.coord(v));
      if (de.is_zero_expr()) continue;
      Tuple nt;
      int sign = merge_tuples(Tuple{static_cast<uint8_t>(v)}, t, nt);
      if (sign == 0) continue;
      out.add_to(nt, sign < 0 ? -de : de);
    }
  }
  return out;
}

Form ext_d(const Form& a) {
  const Chart& ch = *a.chart();
  if (a.degree() + 1 > static_cast<int>(ch.dim())) return Form(a.chart(), a.degree() + 1);
  if (!parallel_enabled() || a.coeffs().size() < 16) return ext_d_serial(a);
  std::vector<const std::pair<const Tuple, Expr>*> rows;
  rows.reserve(a.coeffs().size());
  for (const auto& kv : a.coeffs()) rows.push_back(&kv);
  std::vector<std::map<Tuple, Expr>> partial(rows.size());
  parallel_for_index(rows.size(), [&](size_t i) {
    Tuple nt;
    for (size_t v = 0; v < ch.dim(); ++v) {
      Expr de = diff(rows[i]->second, ch.coord(v));
      if (de.is_zero_expr()) continue;
      int sign = merge_tuples(Tuple{static_cast<uint8_t>(v)}, rows[i]->first, nt);
      if (sign == 0) continue;
      auto it = partial[i].find(nt);
      if (sign < 0) de = -de;
      if (it == partial[i].end())
        partial[i].emplace(nt, std::move(de));
      else
        it->second = it->second + de;
    }
  });
  Form out(a.chart(), a.degree() + 1);
  for (auto& m : partial)
    for (auto& [t, e] : m) out.add_to(t, e);
  return out;
}

Form contract(const VectorField& x, const Form& a) {
  require_same_chart(x.chart(), a.chart());
  if (a.degree() < 1) throw Error("interior product needs degree >= 1");
  Form out(a.chart(), a.degree() - 1);
  for (const auto& [t, e] : a.coeffs()) {
    for (size_t p = 0; p < t.size(); ++p) {
      auto it = x.components().find(t[p]);
      if (it == x.components().end()) continue;
      Expr c = e * it->second;
      if (p % 2 == 1) c = -c;
      Tuple nt;
      nt.reserve(t.size() - 1);
      for (size_t q = 0; q < t.size(); ++q)
        if (q != p) nt.push_back(t[q]);
      out.add_to(nt, c);
    }
  }
  return out;
}

Expr pairing(const Form& one_form, const VectorField& x) {
  if (one_form.degree() != 1) throw Error("pairing needs a 1-form");
  Form c = contract(x, one_form);
  return c.coeff({});
}

Form lie_derivative(const VectorField& x, const Form& a) {
  require_same_chart(x.chart(), a.chart());
  if (a.degree() == 0) {
    Expr v;
    const Chart& ch = *a.chart();
    for (const auto& [idx, comp] : x.components()) v = v + comp * diff(a.coeff({}), ch.coord(idx));
    return Form::scalar(a.chart(), v);
  }
  Form term1 = contract(x, ext_d(a));
  Form term2 = ext_d(contract(x, a));
  return term1 + term2;
}

Expr evaluate(const Form& a, std::span<const VectorField> fields) {
  if (static_cast<int>(fields.size()) != a.degree())
    throw Error("evaluate: arity mismatch (degree " + std::to_string(a.degree()) + ", got " +
                std::to_string(fields.size()) + " fields)");
  Form cur = a;
  for (const VectorField& x : fields) cur = contract(x, cur);
  return cur.coeff({});
}

VectorField bracket(const VectorField& x, const VectorField& y) {
  require_same_chart(x.chart(), y.chart());
  const Chart& ch = *x.chart();
  VectorField out(x.chart());
  for (size_t w = 0; w < ch.dim(); ++w) {
    Expr acc;
    for (const auto& [idx, xc] : x.components()) {
      Expr yw = y.components().count(static_cast<int>(w))
                    ? y.components().at(static_cast<int>(w))
                    : Expr();
      if (!yw.is_zero_expr()) acc = acc + xc * diff(yw, ch.coord(idx));
    }
    for (const auto& [idx, yc] : y.components()) {
      Expr xw = x.components().count(static_cast<int>(w))
                    ? x.components().at(static_cast<int>(w))
                    : Expr();
      if (!xw.is_zero_expr()) acc = acc - yc * diff(xw, ch.coord(idx));
    }
    if (!acc.is_zero_expr()) out.set(ch.coord(w), acc);
  }
  return out;
}

VectorField apply_substitution(const VectorField& x, const Substitution& s) {
  VectorField out(x.chart());
  for (const auto& [idx, comp] : x.components())
    out.set(x.chart()->coord(idx), s.apply(comp));
  return out;
}

Form apply_substitution(const Form& a, const Substitution& s) {
  Form out(a.chart(), a.degree());
  for (const auto& [t, e] : a.coeffs()) out.add_to(t, s.apply(e));
  return out;
}

Form FactoredForm::expanded() const {
  if (factors.empty()) return Form::scalar(chart, Expr::from_int(1));
  return multi_wedge(factors);
}

namespace {

// Common single-term content of all coefficients of a 1-form (rational
// content plus shared monomial factors); Expr one when nothing is shared.
Expr form_content(const Form& g) {
  std::vector<const Term*> all;
  for (const auto& [t, e] : g.coeffs())
    for (const Term& term : e.terms()) all.push_back(&term);
  if (all.empty()) return Expr::from_int(1);
  Rational content = 0;
  for (const Term* t : all) content = rational_content_gcd(content, t->coeff);
  std::vector<Factor> common = all[0]->factors;
  for (const Term* t : all) {
    std::vector<Factor> next;
    for (const Factor& c : common) {
      for (const Factor& f : t->factors) {
        if (compare(c.base, f.base) == 0) {
          Factor kept = c;
          if (f.exp < kept.exp) kept.exp = f.exp;
          if (kept.exp > 0) next.push_back(kept);
          break;
        }
      }
    }
    common = std::move(next);
    if (common.empty()) break;
  }
  Term ct;
  ct.coeff = content == 0 ? Rational(1) : content;
  ct.factors = std::move(common);
  return Expr::from_canonical({std::move(ct)});
}

}  // namespace

ContractionResult contract_factors(const VectorField& x, const FactoredForm& f) {
  std::vector<Expr> pair_vals;
  pair_vals.reserve(f.factors.size());
  int pivot = -1;
  long best = 0;
  for (size_t i = 0; i < f.factors.size(); ++i) {
    Expr v = pairing(f.factors[i], x);
    bool nz = !v.is_zero_expr() && !check_zero(v).zero;
    pair_vals.push_back(std::move(v));
    if (!nz) continue;
    long score = pair_vals[i].is_rational_const() ? 0 : 100 + static_cast<long>(pair_vals[i].terms().size());
    if (pivot < 0 || score < best) {
      pivot = static_cast<int>(i);
      best = score;
    }
  }
  if (pivot < 0)
    throw DegenerateGeometry("contraction vanishes: every factor annihilates the field");

  // Fraction-free combination: dividing by a sum pivot would nest fractions
  // through the cascade, so those rows cross-multiply instead and the scale
  // moves into the recorded multiple. Per-factor content is pulled out the
  // same way.
  ContractionResult res;
  res.factors.chart = f.chart;
  const Form& piv = f.factors[pivot];
  const Expr& cj = pair_vals[pivot];
  const bool cheap_div = cj.is_rational_const() || cj.terms().size() == 1;
  long scaled = 0;
  Expr content_product = Expr::from_int(1);
  for (size_t i = 0; i < f.factors.size(); ++i) {
    if (static_cast<int>(i) == pivot) continue;
    Form g;
    if (pair_vals[i].is_zero_expr()) {
      g = f.factors[i];
    } else if (cheap_div) {
      g = f.factors[i] - (pair_vals[i] / cj) * piv;
    } else {
      g = cj * f.factors[i] - pair_vals[i] * piv;
      ++scaled;
    }
    Expr content = form_content(g);
    if (!(content == Expr::from_int(1))) {
      g = g / content;
      content_product = content_product * content;
    }
    res.factors.factors.push_back(std::move(g));
  }
  res.multiple = (pivot % 2 == 0 ? cj : -cj) * content_product;
  if (scaled > 0) res.multiple = res.multiple * pow(cj, Rational(-scaled));
  return res;
}

std::string to_string(const Form& a) {
  if (a.is_zero_form()) return "0";
  const Chart& ch = *a.chart();
  std::ostringstream os;
  bool first = true;
  for (const auto& [t, e] : a.coeffs()) {
    if (!first) os << " + ";
    first = false;
    os << "(" << to_string(e) << ")";
    for (size_t i = 0; i < t.size(); ++i)
      os << (i == 0 ? "*d" : "^d") << ch.coord(t[i]).name();
  }
  return os.str();
}

std::string to_string(const VectorField& x) {
  if (x.is_zero_field()) return "0";
  const Chart& ch = *x.chart();
  std::ostringstream os;
  bool first = true;
  for (const auto& [idx, e] : x.components()) {
    if (!first) os << " + ";
    first = false;
    os << "(" << to_string(e) << ")*D(" << ch.coord(idx).name() << ")";
  }
  return os.str();
}

}  // namespace vessiot
