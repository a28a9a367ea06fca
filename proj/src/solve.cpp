#include "vessiot/solve.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "vessiot/errors.hpp"

namespace vessiot {

namespace {

struct Row {
  std::map<uint32_t, Expr> c;
  Expr rest;
  bool alive = true;
};

// Smaller score = better pivot.
long pivot_score(const Expr& e) {
  if (e.is_rational_const()) return 0;
  if (e.terms().size() == 1) return 1 + static_cast<long>(e.terms()[0].factors.size());
  return 100 + static_cast<long>(e.terms().size());
}

}  // namespace

LinearSolution solve_linear(const std::vector<Expr>& eqs, const std::vector<Symbol>& unknowns,
                            const SolveOptions& opts) {
  LinearSolution out;
  std::set<uint32_t> uset;
  for (Symbol u : unknowns) uset.insert(u.id());

  std::vector<Row> rows;
  for (const Expr& eq : eqs) {
    LinearView lv = collect_linear(eq, uset);
    Row r;
    r.c = std::move(lv.coeffs);
    r.rest = std::move(lv.rest);
    if (r.c.empty()) {
      if (!check_zero(r.rest).zero)
        throw InconsistentSystem("equation reduces to nonzero constant: " + to_string(r.rest));
      continue;
    }
    rows.push_back(std::move(r));
  }

  std::set<uint32_t> prefer_free;
  for (Symbol s : opts.preferred_free) prefer_free.insert(s.id());
  std::vector<Symbol> order;  // elimination priority
  {
    std::vector<Symbol> tier1, tier2;
    for (Symbol u : unknowns)
      (prefer_free.count(u.id()) ? tier2 : tier1).push_back(u);
    auto desc = [](Symbol a, Symbol b) { return a.id() > b.id(); };
    std::sort(tier1.begin(), tier1.end(), desc);
    std::sort(tier2.begin(), tier2.end(), desc);
    order = tier1;
    order.insert(order.end(), tier2.begin(), tier2.end());
  }

  struct Relation {
    Symbol target;
    std::map<uint32_t, Expr> c;  // remaining unknown coefficients
    Expr rest;
    Expr pivot;
  };
  std::vector<Relation> relations;
  std::set<uint32_t> dependent;

  auto eliminate = [&](Symbol target) -> bool {
    int best = -1;
    long best_score = 0;
    for (size_t i = 0; i < rows.size(); ++i) {
      if (!rows[i].alive) continue;
      auto it = rows[i].c.find(target.id());
      if (it == rows[i].c.end()) continue;
      long s = pivot_score(it->second);
      if (best < 0 || s < best_score) {
        best = static_cast<int>(i);
        best_score = s;
      }
    }
    if (best < 0) return false;
    Row& prow = rows[best];
    Expr pivot = prow.c.at(target.id());
    if (!pivot.is_rational_const()) out.pivots_assumed.push_back(pivot);
    for (size_t j = 0; j < rows.size(); ++j) {
      if (!rows[j].alive || static_cast<int>(j) == best) continue;
      auto jt = rows[j].c.find(target.id());
      if (jt == rows[j].c.end()) continue;
      Expr cj = jt->second;
      Row nr;
      for (auto& [id, ce] : rows[j].c) {
        if (id == target.id()) continue;
        Expr pc;
        auto pt = prow.c.find(id);
        if (pt != prow.c.end()) pc = pt->second;
        Expr nc = ce * pivot - pc * cj;
        if (!nc.is_zero_expr()) nr.c.emplace(id, std::move(nc));
      }
      for (auto& [id, pe] : prow.c) {
        if (id == target.id() || rows[j].c.count(id)) continue;
        Expr nc = -(pe * cj);
        if (!nc.is_zero_expr()) nr.c.emplace(id, std::move(nc));
      }
      nr.rest = rows[j].rest * pivot - prow.rest * cj;
      rows[j].c = std::move(nr.c);
      rows[j].rest = std::move(nr.rest);
      if (rows[j].c.empty()) {
        if (!check_zero(rows[j].rest).zero)
          throw InconsistentSystem("inconsistent system: residual " + to_string(rows[j].rest));
        rows[j].alive = false;
      }
    }
    Relation rel;
    rel.target = target;
    rel.pivot = pivot;
    rel.rest = prow.rest;
    for (auto& [id, ce] : prow.c)
      if (id != target.id()) rel.c.emplace(id, ce);
    relations.push_back(std::move(rel));
    dependent.insert(target.id());
    prow.alive = false;
    return true;
  };

  for (Symbol target : order) {
    bool any_alive = false;
    for (const Row& r : rows)
      if (r.alive) { any_alive = true; break; }
    if (!any_alive) break;
    if (prefer_free.count(target.id())) {
      // only eliminate a preferred-free unknown if some row still forces it
      bool forced = false;
      for (const Row& r : rows) {
        if (!r.alive) continue;
        bool only_free = true;
        for (auto& [id, ce] : r.c)
          if (!prefer_free.count(id)) { only_free = false; break; }
        if (only_free && r.c.count(target.id())) forced = true;
      }
      if (!forced) continue;
    }
    eliminate(target);
  }
  for (const Row& r : rows) {
    if (!r.alive) continue;
    if (!r.c.empty())
      throw InconsistentSystem("elimination left an unresolved relation");
    if (!check_zero(r.rest).zero)
      throw InconsistentSystem("inconsistent system: residual " + to_string(r.rest));
  }

  // Back-substitute so each dependent is expressed in free unknowns only.
  std::map<uint32_t, Expr> resolved;
  for (auto it = relations.rbegin(); it != relations.rend(); ++it) {
    Expr value = -it->rest;
    for (auto& [id, ce] : it->c) {
      auto rit = resolved.find(id);
      Expr uv = rit != resolved.end() ? rit->second : Expr::from_symbol(Symbol(id));
      value = value - ce * uv;
    }
    value = value / it->pivot;
    resolved.emplace(it->target.id(), std::move(value));
  }
  for (const Relation& rel : relations) out.solution.set(rel.target, resolved.at(rel.target.id()));
  for (Symbol u : unknowns)
    if (!dependent.count(u.id())) out.free_unknowns.push_back(u);
  return out;
}

}  // namespace vessiot
