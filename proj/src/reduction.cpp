#include "vessiot/reduction.hpp"

#include <algorithm>
#include <set>

#include "vessiot/errors.hpp"
#include "vessiot/parallel.hpp"

namespace vessiot {

namespace {

bool term_has_unknown_deriv(const Term& t, const std::set<uint32_t>& unknown_ids);

bool expr_has_unknown_deriv(const Expr& e, const std::set<uint32_t>& unknown_ids) {
  for (const Term& t : e.terms())
    if (term_has_unknown_deriv(t, unknown_ids)) return true;
  return false;
}

bool term_has_unknown_deriv(const Term& t, const std::set<uint32_t>& unknown_ids) {
  for (const Factor& f : t.factors) {
    if (f.base.tag == Base::Tag::Sym) {
      Symbol s = f.base.sym;
      if (s.kind() == SymbolKind::UnknownDeriv && unknown_ids.count(s.base_unknown().id()))
        return true;
    } else if (expr_has_unknown_deriv(*f.base.arg, unknown_ids)) {
      return true;
    }
  }
  return false;
}

Expr drop_unknown_deriv_terms(const Expr& e, const std::set<uint32_t>& unknown_ids) {
  std::vector<Term> kept;
  for (const Term& t : e.terms())
    if (!term_has_unknown_deriv(t, unknown_ids)) kept.push_back(t);
  return Expr::from_canonical(std::move(kept));
}

Expr normalize_condition(const Expr& e) {
  if (e.is_zero_expr()) return e;
  Rational content = 0;
  for (const Term& t : e.terms()) content = rational_content_gcd(content, t.coeff);
  if (e.terms()[0].coeff < 0) content = -content;
  if (content == 1) return e;
  return Expr::from_rational(Rational(1) / content) * e;
}

// Replacement 1-forms for reduction modulo the constraint ideal: for each
// constraint form du_lead - trailing, the leading differential rewrites to
// its trailing part. On the adapted cobasis {theta, phi, dx} this turns
// d(alpha) ^ Omega_theta ^ Omega_phi = 0 into an equivalent residual set
// whose members are the coefficients of the dx-basis tuples; Omega has unit
// leading coefficient, so the two condition sets cut out the same variety.
std::map<int, Form> reduction_map(const AugmentedSystem& a) {
  std::map<int, Form> repl;
  const ChartPtr& ch = a.problem.restricted;
  for (size_t i = 0; i < a.problem.theta.size(); ++i) {
    Symbol lead = a.problem.theta_leading[i];
    repl.emplace(ch->index_of(lead), Form::d_coord(ch, lead) - a.problem.theta[i]);
  }
  for (size_t i = 0; i < a.phis.size(); ++i) {
    Symbol lead = a.problem.parametric[i];
    repl.emplace(ch->index_of(lead), Form::d_coord(ch, lead) - a.phis[i]);
  }
  return repl;
}

Form reduce_mod_constraints(const Form& f, const std::map<int, Form>& repl) {
  const ChartPtr& ch = f.chart();
  Form out(ch, f.degree());
  for (const auto& [t, c] : f.coeffs()) {
    std::vector<Form> parts;
    parts.reserve(t.size());
    for (uint8_t w : t) {
      auto it = repl.find(static_cast<int>(w));
      parts.push_back(it == repl.end() ? Form::d_coord(ch, ch->coord(w)) : it->second);
    }
    Form piece = multi_wedge(parts);
    out = out + c * piece;
  }
  return out;
}

std::vector<Expr> reduced_residuals(const Form& dalpha, const std::map<int, Form>& repl) {
  Form r = reduce_mod_constraints(dalpha, repl);
  std::vector<Expr> out;
  out.reserve(r.coeffs().size());
  for (const auto& [t, e] : r.coeffs()) out.push_back(e);
  return out;
}

}  // namespace

void normalize_conditions(std::vector<Expr>& conds) {
  for (Expr& c : conds) c = normalize_condition(c);
  std::sort(conds.begin(), conds.end(), [](const Expr& a, const Expr& b) {
    return compare(a, b) < 0;
  });
  conds.erase(std::unique(conds.begin(), conds.end(),
                          [](const Expr& a, const Expr& b) { return compare(a, b) == 0; }),
              conds.end());
  conds.erase(std::remove_if(conds.begin(), conds.end(),
                             [](const Expr& c) { return c.is_zero_expr(); }),
              conds.end());
}

std::vector<Form> AugmentedSystem::all_forms() const {
  std::vector<Form> out = problem.theta;
  out.insert(out.end(), phis.begin(), phis.end());
  return out;
}

AugmentedSystem augment(const JetProblem& p) {
  AugmentedSystem a;
  a.problem = p;
  const ChartPtr& ch = p.restricted;
  std::vector<Symbol> deps = ch->coords();
  int counter = 1;
  for (Symbol J : p.parametric) {
    Form phi = Form::d_coord(ch, J);
    for (int i = 0; i < p.jet->m(); ++i) {
      Symbol a_i = symbols::fresh_unknown("a_" + std::to_string(counter++), deps);
      a.unknowns.push_back(a_i);
      phi = phi - Expr::from_symbol(a_i) * Form::d_coord(ch, p.jet->base(i));
    }
    a.phis.push_back(std::move(phi));
  }
  a.free_unknowns = a.unknowns;
  size_t dim = ch->dim();
  if (a.problem.theta.size() + a.phis.size() + p.jet->m() != dim)
    throw Error("augmented system dimension count mismatch");
  return a;
}

ConditionSet algebraic_conditions(const AugmentedSystem& a) {
  std::set<uint32_t> ids;
  for (Symbol u : a.unknowns) ids.insert(u.id());
  std::map<int, Form> repl = reduction_map(a);
  ConditionSet cs;
  std::vector<std::vector<Expr>> per_form(a.problem.theta.size());
  parallel_for_index(a.problem.theta.size(), [&](size_t i) {
    std::vector<Expr> res = reduced_residuals(ext_d(a.problem.theta[i]), repl);
    for (Expr& e : res) e = drop_unknown_deriv_terms(e, ids);
    per_form[i] = std::move(res);
  });
  for (auto& v : per_form) cs.algebraic.insert(cs.algebraic.end(), v.begin(), v.end());
  normalize_conditions(cs.algebraic);
  return cs;
}

AugmentedSystem solve_algebraic(const ConditionSet& c, const AugmentedSystem& a,
                                const SolveOptions& opts) {
  LinearSolution sol = solve_linear(c.algebraic, a.free_unknowns, opts);
  AugmentedSystem out = a;
  for (Form& phi : out.phis) phi = apply_substitution(phi, sol.solution);
  out.free_unknowns = sol.free_unknowns;
  for (Symbol k : sol.solution.keys()) out.applied.set(k, *sol.solution.find(k));
  out.pivots_assumed.insert(out.pivots_assumed.end(), sol.pivots_assumed.begin(),
                            sol.pivots_assumed.end());
  return out;
}

ConditionSet differential_conditions(const AugmentedSystem& a) {
  std::map<int, Form> repl = reduction_map(a);
  ConditionSet cs;
  std::vector<std::vector<Expr>> per_form(a.phis.size());
  parallel_for_index(a.phis.size(), [&](size_t i) {
    per_form[i] = reduced_residuals(ext_d(a.phis[i]), repl);
  });
  for (auto& v : per_form) cs.differential.insert(cs.differential.end(), v.begin(), v.end());
  normalize_conditions(cs.differential);
  return cs;
}

FrobeniusReport frobenius_check(const std::vector<Form>& forms) {
  if (forms.empty()) throw Error("frobenius_check on empty form list");
  for (const Form& f : forms)
    if (f.degree() != 1) throw Error("frobenius_check needs 1-forms");

  // linear independence over the expression field; pivots chosen for
  // structural simplicity to keep the cross-multiplied entries small
  {
    std::vector<std::map<int, Expr>> rows;
    for (const Form& f : forms) {
      std::map<int, Expr> row;
      for (const auto& [t, e] : f.coeffs()) row[t[0]] = e;
      rows.push_back(std::move(row));
    }
    size_t rank = 0;
    std::set<int> used_cols;
    std::vector<bool> used_row(rows.size(), false);
    for (size_t step = 0; step < rows.size(); ++step) {
      int pr = -1, pc = -1;
      long best = 0;
      for (size_t r = 0; r < rows.size(); ++r) {
        if (used_row[r]) continue;
        for (auto& [col, e] : rows[r]) {
          if (used_cols.count(col)) continue;
          long score = e.is_rational_const()
                           ? 0
                           : (e.terms().size() == 1 ? 10 : 100 + static_cast<long>(e.terms().size()));
          if ((pr < 0 || score < best) && !check_zero(e).zero) {
            pr = static_cast<int>(r);
            pc = col;
            best = score;
            if (score == 0) break;
          }
        }
        if (best == 0 && pr >= 0) break;
      }
      if (pr < 0) break;
      ++rank;
      used_cols.insert(pc);
      used_row[pr] = true;
      const Expr pe = rows[pr].at(pc);
      for (size_t j = 0; j < rows.size(); ++j) {
        if (used_row[j]) continue;
        auto it = rows[j].find(pc);
        if (it == rows[j].end()) continue;
        Expr cj = it->second;
        std::map<int, Expr> nr;
        for (auto& [col, e] : rows[j]) {
          if (col == pc) continue;
          Expr pv;
          auto pt = rows[pr].find(col);
          if (pt != rows[pr].end()) pv = pt->second;
          Expr ne = e * pe - pv * cj;
          if (!ne.is_zero_expr()) nr.emplace(col, std::move(ne));
        }
        for (auto& [col, pv] : rows[pr]) {
          if (col == pc || rows[j].count(col)) continue;
          Expr ne = -(pv * cj);
          if (!ne.is_zero_expr()) nr.emplace(col, std::move(ne));
        }
        rows[j] = std::move(nr);
      }
    }
    if (rank < forms.size()) throw DegenerateGeometry("dependent input forms");
  }

  Form omega = multi_wedge(forms);
  FrobeniusReport report;
  report.entries.resize(forms.size());
  parallel_for_index(forms.size(), [&](size_t i) {
    FrobeniusEntry entry;
    entry.form_index = i;
    Form w = wedge(ext_d(forms[i]), omega);
    for (const auto& [t, e] : w.coeffs()) {
      if (!check_zero(e).zero) {
        entry.integrable = false;
        entry.counterexample_tuple = t;
        entry.counterexample = e;
        break;
      }
    }
    report.entries[i] = std::move(entry);
  });
  for (const FrobeniusEntry& e : report.entries)
    if (!e.integrable) report.integrable = false;
  return report;
}

std::vector<Expr> substitute_conditions(const std::vector<Expr>& conds, const Substitution& s) {
  std::vector<Expr> out;
  out.reserve(conds.size());
  for (const Expr& c : conds) out.push_back(s.apply(c));
  return out;
}

}  // namespace vessiot
