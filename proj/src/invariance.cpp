#include "vessiot/invariance.hpp"

#include <algorithm>
#include <set>

#include "vessiot/errors.hpp"
#include "vessiot/parallel.hpp"

namespace vessiot {

namespace {

void check_arity(const AugmentedSystem& a, const SolvableStructure& s) {
  size_t k = a.problem.theta.size() + a.phis.size();
  if (s.fields.size() != k)
    throw Error("solvable structure needs " + std::to_string(k) + " fields, got " +
                std::to_string(s.fields.size()));
}

// Pulls the common monomial content out of a residual so the core pattern is
// visible; returns {content, reduced}. The content's nonvanishing is a
// genericity assumption when it is not structurally nonzero.
std::pair<Expr, Expr> extract_monomial_content(const Expr& e) {
  if (e.is_zero_expr() || e.terms().size() == 0) return {Expr::from_int(1), e};
  std::vector<Factor> common = e.terms()[0].factors;
  for (const Term& t : e.terms()) {
    std::vector<Factor> next;
    for (const Factor& c : common) {
      for (const Factor& f : t.factors) {
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
  // never pull out unknowns or their derivatives
  std::vector<Factor> content_factors;
  for (const Factor& f : common) {
    if (f.base.tag == Base::Tag::Sym) {
      SymbolKind k = f.base.sym.kind();
      if (k == SymbolKind::Unknown || k == SymbolKind::UnknownDeriv) continue;
    }
    content_factors.push_back(f);
  }
  if (content_factors.empty()) return {Expr::from_int(1), e};
  Term ct;
  ct.coeff = 1;
  ct.factors = content_factors;
  Expr content = Expr::from_canonical({std::move(ct)});
  return {content, e / content};
}

struct DerivOccurrence {
  Symbol deriv;    // the UnknownDeriv symbol
  Symbol base;     // its unknown
  Symbol coord;    // single derivative coordinate (invalid if higher order)
  bool first_order = false;
};

std::optional<DerivOccurrence> deriv_info(Symbol s) {
  if (s.kind() != SymbolKind::UnknownDeriv) return std::nullopt;
  DerivOccurrence d;
  d.deriv = s;
  d.base = s.base_unknown();
  auto coords = s.derivative_coords();
  if (coords.size() == 1) {
    d.coord = coords[0];
    d.first_order = true;
  }
  return d;
}

// Multiplies through by plain-symbol denominators so Euler-type patterns
// like w * D(a,w) + a are visible.
Expr clear_symbol_denominators(const Expr& e) {
  std::map<uint32_t, Rational> worst;
  for (const Term& t : e.terms())
    for (const Factor& f : t.factors)
      if (f.base.tag == Base::Tag::Sym && f.exp < 0) {
        auto it = worst.find(f.base.sym.id());
        if (it == worst.end() || f.exp < it->second) worst[f.base.sym.id()] = f.exp;
      }
  if (worst.empty()) return e;
  Expr mult = Expr::from_int(1);
  for (auto& [id, q] : worst) mult = mult * pow(Expr::from_symbol(Symbol(id)), -q);
  return e * mult;
}

Constraint classify_residual(const Expr& raw0, int stage) {
  Expr raw = clear_symbol_denominators(clear_denominators(raw0));
  Constraint c;
  c.stage = stage;
  c.residual = raw;
  auto [content, e] = extract_monomial_content(raw);

  // single term c * D(a,w)
  if (e.terms().size() == 1) {
    const Term& t = e.terms()[0];
    if (t.factors.size() == 1 && t.factors[0].exp == 1 &&
        t.factors[0].base.tag == Base::Tag::Sym) {
      auto d = deriv_info(t.factors[0].base.sym);
      if (d && d->first_order) {
        c.kind = Constraint::Kind::VanishingPartial;
        c.unknown = d->base;
        c.coord = d->coord;
        c.residual = e;
        return c;
      }
    }
  }

  // Euler-type scaling in a single unknown:
  //   sum_w c_w * w * D(a,w) + shift * a = 0 with rational c_w, shift
  Symbol the_unknown;
  bool scaling = true;
  std::vector<std::pair<Symbol, Rational>> weights;
  Rational shift = 0;
  for (const Term& t : e.terms()) {
    Symbol coord, deriv, plain;
    bool bad = false;
    for (const Factor& f : t.factors) {
      if (f.base.tag != Base::Tag::Sym || f.exp != 1) {
        bad = true;
        break;
      }
      Symbol s = f.base.sym;
      if (s.kind() == SymbolKind::Coordinate) {
        if (coord.valid()) bad = true;
        coord = s;
      } else if (s.kind() == SymbolKind::Unknown) {
        if (plain.valid()) bad = true;
        plain = s;
      } else if (auto d = deriv_info(s); d && d->first_order) {
        if (deriv.valid()) bad = true;
        deriv = s;
      } else {
        bad = true;
      }
    }
    if (bad) {
      scaling = false;
      break;
    }
    if (plain.valid() && !deriv.valid() && !coord.valid()) {
      if (the_unknown.valid() && !(the_unknown == plain)) scaling = false;
      the_unknown = plain;
      shift += t.coeff;
    } else if (deriv.valid() && coord.valid() && !plain.valid()) {
      auto d = deriv_info(deriv);
      if (!(d->coord == coord)) {
        scaling = false;
        break;
      }
      if (the_unknown.valid() && !(the_unknown == d->base)) scaling = false;
      the_unknown = d->base;
      weights.emplace_back(coord, t.coeff);
    } else {
      scaling = false;
      break;
    }
    if (!scaling) break;
  }
  if (scaling && the_unknown.valid() && !weights.empty()) {
    c.kind = Constraint::Kind::Scaling;
    c.unknown = the_unknown;
    c.weights = std::move(weights);
    c.shift = shift;
    c.residual = e;
    return c;
  }
  c.kind = Constraint::Kind::General;
  return c;
}

// Zero substitution for derivative symbols killed by the vanishing set.
Expr kill_dead_derivatives(const Expr& e,
                           const std::map<uint32_t, std::set<uint32_t>>& vanishing) {
  std::set<uint32_t> syms;
  collect_symbols(e, syms);
  Substitution zero;
  for (uint32_t id : syms) {
    Symbol s((id));
    if (s.kind() != SymbolKind::UnknownDeriv) continue;
    auto it = vanishing.find(s.base_unknown().id());
    if (it == vanishing.end()) continue;
    for (Symbol c : s.derivative_coords()) {
      if (it->second.count(c.id())) {
        zero.set(s, Expr());
        break;
      }
    }
  }
  return zero.size() ? zero.apply(e) : e;
}

}  // namespace

AugmentedSystem normalize_betas(const AugmentedSystem& a, const SolvableStructure& s) {
  check_arity(a, s);
  size_t np = a.problem.theta.size();
  AugmentedSystem out = a;
  for (size_t b = 0; b < out.phis.size(); ++b) {
    // r coefficients for phi^b: sum_a r_a theta^a(X_i) = -phi^b(X_i)
    bool needed = false;
    std::vector<Expr> rhs(np);
    for (size_t i = 0; i < np; ++i) {
      rhs[i] = pairing(out.phis[b], s.fields[i]);
      if (!rhs[i].is_zero_expr() && !check_zero(rhs[i]).zero) needed = true;
    }
    if (!needed) continue;
    std::vector<Symbol> rs;
    for (size_t t = 0; t < np; ++t)
      rs.push_back(symbols::fresh_unknown("r_" + std::to_string(b + 1) + "_" + std::to_string(t + 1),
                                          a.problem.restricted->coords()));
    std::vector<Expr> eqs;
    for (size_t i = 0; i < np; ++i) {
      Expr eq = rhs[i];
      for (size_t t = 0; t < np; ++t)
        eq = eq + Expr::from_symbol(rs[t]) * pairing(a.problem.theta[t], s.fields[i]);
      eqs.push_back(eq);
    }
    LinearSolution sol = solve_linear(eqs, rs);
    Substitution values;  // free r's become zero
    for (Symbol r : sol.free_unknowns) values.set(r, Expr());
    Form phi = out.phis[b];
    for (size_t t = 0; t < np; ++t) {
      Expr rv;
      if (const Expr* v = sol.solution.find(rs[t]))
        rv = values.apply(*v);
      else if (std::find(sol.free_unknowns.begin(), sol.free_unknowns.end(), rs[t]) !=
               sol.free_unknowns.end())
        rv = Expr();
      phi = phi + rv * a.problem.theta[t];
    }
    out.phis[b] = std::move(phi);
    out.pivots_assumed.insert(out.pivots_assumed.end(), sol.pivots_assumed.begin(),
                              sol.pivots_assumed.end());
  }
  return out;
}

Expr independence_certificate(const AugmentedSystem& a, const SolvableStructure& s) {
  check_arity(a, s);
  Form omega = multi_wedge(a.all_forms());
  return evaluate(omega, s.fields);
}

namespace {

// Residual components of a 1-form modulo the span of the given factors:
// fraction-free elimination against the factor pivots; the leftover
// components vanish exactly when the form lies in the span (on the locus
// where the recorded pivots do not vanish).
struct SpanReducer {
  std::vector<Form> rows;   // echelonized factors
  std::vector<int> pivots;  // pivot column per row
  std::vector<Expr> pivot_values;

  explicit SpanReducer(const std::vector<Form>& factors) {
    std::set<int> used;
    for (const Form& f : factors) {
      Form r = f;
      // reduce against previous rows first
      for (size_t k = 0; k < rows.size(); ++k) {
        Expr c = r.coeff(Tuple{static_cast<uint8_t>(pivots[k])});
        if (!c.is_zero_expr()) r = pivot_values[k] * r - c * rows[k];
      }
      int pc = -1;
      long best = 0;
      for (const auto& [t, e] : r.coeffs()) {
        if (used.count(t[0])) continue;
        if (check_zero(e).zero) continue;
        long score = e.is_rational_const()
                         ? 0
                         : (e.terms().size() == 1 ? 10 : 100 + static_cast<long>(e.terms().size()));
        if (pc < 0 || score < best) {
          pc = t[0];
          best = score;
          if (best == 0) break;
        }
      }
      if (pc < 0) throw DegenerateGeometry("dependent factors in cascade stage");
      used.insert(pc);
      Expr content = Expr::from_int(1);
      {
        // strip common single-term content to keep rows small
        std::vector<const Term*> all;
        for (const auto& [t, e] : r.coeffs())
          for (const Term& term : e.terms()) all.push_back(&term);
        if (!all.empty()) {
          Rational rc = 0;
          for (const Term* t : all) rc = rational_content_gcd(rc, t->coeff);
          if (rc != 0 && rc != 1) content = Expr::from_rational(rc);
        }
      }
      if (!(content == Expr::from_int(1))) r = r / content;
      pivots.push_back(pc);
      pivot_values.push_back(r.coeff(Tuple{static_cast<uint8_t>(pc)}));
      rows.push_back(std::move(r));
    }
  }

  // residual coefficients of L modulo the span
  std::vector<Expr> residuals(const Form& L) const {
    Form r = L;
    for (size_t k = 0; k < rows.size(); ++k) {
      Expr c = r.coeff(Tuple{static_cast<uint8_t>(pivots[k])});
      if (!c.is_zero_expr()) r = pivot_values[k] * r - c * rows[k];
    }
    std::vector<Expr> out;
    for (const auto& [t, e] : r.coeffs()) out.push_back(e);
    return out;
  }
};

}  // namespace

ConstraintSet symmetry_constraints(const AugmentedSystem& a, const SolvableStructure& s) {
  check_arity(a, s);
  ConstraintSet out;
  std::map<uint32_t, std::set<uint32_t>> vanishing;  // cumulative ∂a/∂w = 0

  FactoredForm fac{a.problem.restricted, a.all_forms()};
  for (size_t i = 0; i < s.fields.size(); ++i) {
    const VectorField& X = s.fields[i];
    SpanReducer reducer(fac.factors);
    for (const Expr& pv : reducer.pivot_values)
      if (!pv.is_rational_const()) out.pivots_assumed.push_back(pv);
    std::vector<std::vector<Expr>> per_factor(fac.factors.size());
    parallel_for_index(fac.factors.size(), [&](size_t j) {
      Form L = lie_derivative(X, fac.factors[j]);
      if (L.is_zero_form()) return;
      per_factor[j] = reducer.residuals(L);
    });
    std::vector<Expr> raws;
    for (auto& v : per_factor) raws.insert(raws.end(), v.begin(), v.end());
    for (Expr& r : raws) r = kill_dead_derivatives(r, vanishing);
    normalize_conditions(raws);

    int stage = static_cast<int>(i) + 1;
    auto emit = [&](Constraint c) {
      if (c.kind == Constraint::Kind::VanishingPartial) {
        if (vanishing[c.unknown.id()].count(c.coord.id())) return;
        vanishing[c.unknown.id()].insert(c.coord.id());
        out.items.push_back(std::move(c));
        return;
      }
      Expr reduced = kill_dead_derivatives(c.residual, vanishing);
      if (reduced.is_zero_expr() || check_zero(reduced).zero) return;  // implied
      for (const Constraint& prev : out.items)
        if (compare(prev.residual, reduced) == 0) return;
      c.residual = reduced;
      out.items.push_back(std::move(c));
    };

    // The residuals are linear in the stage's formal derivative symbols;
    // triangularizing them separates the forced vanishing partials from
    // genuine relations, with division pivots recorded.
    std::set<uint32_t> deriv_ids;
    for (const Expr& r : raws) {
      std::set<uint32_t> syms;
      collect_symbols(r, syms);
      for (uint32_t id : syms)
        if (Symbol(id).kind() == SymbolKind::UnknownDeriv) deriv_ids.insert(id);
    }
    bool solved = false;
    if (!raws.empty() && !deriv_ids.empty()) {
      std::vector<Symbol> derivs;
      for (uint32_t id : deriv_ids) derivs.push_back(Symbol(id));
      try {
        LinearSolution sol = solve_linear(raws, derivs);
        for (Symbol d : sol.solution.keys()) {
          const Expr& val = *sol.solution.find(d);
          if (val.is_zero_expr()) {
            auto info = deriv_info(d);
            if (info && info->first_order) {
              Constraint c;
              c.kind = Constraint::Kind::VanishingPartial;
              c.stage = stage;
              c.unknown = info->base;
              c.coord = info->coord;
              c.residual = Expr::from_symbol(d);
              emit(std::move(c));
              continue;
            }
          }
          Expr rel = clear_denominators(Expr::from_symbol(d) - val);
          emit(classify_residual(rel, stage));
        }
        out.pivots_assumed.insert(out.pivots_assumed.end(), sol.pivots_assumed.begin(),
                                  sol.pivots_assumed.end());
        solved = true;
      } catch (const Error&) {
        solved = false;  // fall back to raw classification
      }
    }
    if (!solved) {
      for (const Expr& r : raws) emit(classify_residual(r, stage));
    }

    if (i + 1 < s.fields.size()) {
      ContractionResult cr;
      try {
        cr = contract_factors(X, fac);
      } catch (const DegenerateGeometry& e) {
        throw CascadeDegenerates(std::string("cascade degenerates at stage ") +
                                     std::to_string(i + 1) + ": " + e.what(),
                                 static_cast<int>(i) + 1);
      }
      fac = cr.factors;
    }
  }
  return out;
}

AugmentedSystem propagate_constraints(const ConstraintSet& c, const AugmentedSystem& a) {
  AugmentedSystem out = a;
  out.pivots_assumed.insert(out.pivots_assumed.end(), c.pivots_assumed.begin(),
                            c.pivots_assumed.end());
  std::map<uint32_t, std::set<uint32_t>> vanishing;
  for (const Constraint& k : c.items)
    if (k.kind == Constraint::Kind::VanishingPartial)
      vanishing[k.unknown.id()].insert(k.coord.id());

  for (Symbol u : out.free_unknowns) {
    auto it = vanishing.find(u.id());
    if (it == vanishing.end()) continue;
    std::vector<Symbol> kept;
    for (Symbol d : u.dependencies())
      if (!it->second.count(d.id())) kept.push_back(d);
    symbols::shrink_dependencies(u, kept);
  }
  for (const Constraint& k : c.items) {
    if (k.kind == Constraint::Kind::VanishingPartial) continue;
    Expr reduced = kill_dead_derivatives(k.residual, vanishing);
    if (reduced.is_zero_expr()) continue;
    bool dup = false;
    for (const Expr& prev : out.retained_constraints)
      if (compare(prev, reduced) == 0) dup = true;
    if (!dup) out.retained_constraints.push_back(std::move(reduced));
  }
  return out;
}

std::vector<size_t> commuting_tail(const SolvableStructure& s) {
  size_t k = s.fields.size();
  std::vector<size_t> tail;
  if (k == 0) return tail;
  tail.push_back(k - 1);
  for (size_t j = k - 1; j-- > 0;) {
    bool commutes = true;
    for (size_t t : tail) {
      VectorField br = bracket(s.fields[j], s.fields[t]);
      for (const auto& [idx, comp] : br.components()) {
        if (!check_zero(comp).zero) {
          commutes = false;
          break;
        }
      }
      if (!commutes) break;
    }
    if (!commutes) break;
    tail.push_back(j);
  }
  std::sort(tail.begin(), tail.end());
  return tail;
}

std::vector<Expr> closure_conditions(const AugmentedSystem& a, const SolvableStructure& s) {
  check_arity(a, s);
  Form omega = multi_wedge(a.all_forms());
  Expr cert = evaluate(omega, s.fields);
  if (check_zero(cert).zero)
    throw DegenerateGeometry("independence certificate is identically zero");

  std::vector<size_t> tail = commuting_tail(s);
  std::vector<Expr> residuals;
  for (size_t t : tail) {
    Form num = omega;
    for (size_t j = 0; j < s.fields.size(); ++j) {
      if (j == t) continue;
      num = contract(s.fields[j], num);
    }
    Form w = num / cert;
    Form dw = ext_d(w);
    for (const auto& [tu, e] : dw.coeffs()) residuals.push_back(e);
  }
  normalize_conditions(residuals);
  return residuals;
}

AugmentedSystem assign(const AugmentedSystem& a, const Substitution& assignment) {
  AugmentedSystem out = a;
  Substitution combined;
  for (Symbol k : assignment.keys()) combined.set(k, *assignment.find(k));
  for (Symbol k : a.applied.keys()) combined.set(k, *a.applied.find(k));
  out.applied = combined;
  for (Form& phi : out.phis) phi = apply_substitution(phi, assignment);
  std::vector<Symbol> remaining;
  for (Symbol u : out.free_unknowns)
    if (!assignment.has(u)) remaining.push_back(u);
  out.free_unknowns = std::move(remaining);
  for (Expr& r : out.retained_constraints) r = assignment.apply(r);
  return out;
}

AnsatzReport verify_ansatz(const AugmentedSystem& a, const SolvableStructure& s,
                           const Substitution& assignment) {
  check_arity(a, s);
  for (Symbol u : a.free_unknowns)
    if (!assignment.has(u))
      throw Error("incomplete assignment: '" + u.name() + "' has no value");
  for (Symbol k : assignment.keys()) {
    if (k.kind() != SymbolKind::Unknown) continue;
    std::set<uint32_t> syms;
    collect_symbols(*assignment.find(k), syms);
    for (uint32_t id : syms) {
      Symbol sym((id));
      if (sym.kind() == SymbolKind::Coordinate && a.problem.restricted->has(sym) &&
          !k.depends_on(sym))
        throw Error("assignment for '" + k.name() + "' mentions '" + sym.name() +
                    "' outside its dependency set");
    }
  }

  AnsatzReport report;
  auto add = [&report](const std::string& group, const std::string& name, bool pass,
                       std::string detail) {
    report.items.push_back({group, name, pass, std::move(detail)});
    if (!pass) report.pass = false;
  };

  AugmentedSystem asg = assign(a, assignment);

  ConditionSet alg = algebraic_conditions(asg);
  for (size_t i = 0; i < alg.algebraic.size(); ++i) {
    bool ok = check_zero(alg.algebraic[i]).zero;
    add("algebraic", "residual " + std::to_string(i + 1), ok,
        ok ? "" : to_string(alg.algebraic[i]));
  }
  if (alg.algebraic.empty()) add("algebraic", "all residuals", true, "");

  ConditionSet dif = differential_conditions(asg);
  for (size_t i = 0; i < dif.differential.size(); ++i) {
    bool ok = check_zero(dif.differential[i]).zero;
    add("differential", "residual " + std::to_string(i + 1), ok,
        ok ? "" : to_string(dif.differential[i]));
  }
  if (dif.differential.empty()) add("differential", "all residuals", true, "");

  for (size_t i = 0; i < asg.retained_constraints.size(); ++i) {
    bool ok = check_zero(asg.retained_constraints[i]).zero;
    add("retained", "constraint " + std::to_string(i + 1), ok,
        ok ? "" : to_string(asg.retained_constraints[i]));
  }

  std::vector<Expr> closure = closure_conditions(asg, s);
  for (size_t i = 0; i < closure.size(); ++i) {
    bool ok = check_zero(closure[i]).zero;
    add("closure", "residual " + std::to_string(i + 1), ok, ok ? "" : to_string(closure[i]));
  }
  if (closure.empty()) add("closure", "all residuals", true, "");

  Expr cert = independence_certificate(asg, s);
  bool cert_ok = is_structurally_nonzero(cert) || !check_zero(cert).zero;
  add("certificate", "nonvanishing", cert_ok, to_string(cert));

  return report;
}

}  // namespace vessiot
