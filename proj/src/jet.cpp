#include "vessiot/jet.hpp"

#include <algorithm>
#include <functional>

#include "vessiot/errors.hpp"

namespace vessiot {

MultiIndex MultiIndex::of(std::vector<uint8_t> raw) {
  std::sort(raw.begin(), raw.end());
  return MultiIndex{std::move(raw)};
}

MultiIndex MultiIndex::extended(uint8_t i) const {
  std::vector<uint8_t> r = idx;
  r.push_back(i);
  return MultiIndex::of(std::move(r));
}

std::vector<MultiIndex> JetChart::indices_of_order(int m, int g) {
  std::vector<MultiIndex> out;
  std::vector<uint8_t> cur;
  // lexicographic enumeration of nondecreasing tuples
  std::function<void(int)> rec = [&](int start) {
    if (static_cast<int>(cur.size()) == g) {
      out.push_back(MultiIndex{cur});
      return;
    }
    for (int i = start; i < m; ++i) {
      cur.push_back(static_cast<uint8_t>(i));
      rec(i);
      cur.pop_back();
    }
  };
  rec(0);
  return out;
}

JetChart::JetChart(std::vector<std::string> indep, std::vector<std::string> dep, int k)
    : indep_(std::move(indep)), dep_(std::move(dep)), k_(k) {
  if (indep_.empty() || dep_.empty() || k_ < 1)
    throw Error("jet chart needs m,n >= 1 and k >= 1");
  std::vector<Symbol> coords;
  for (const std::string& x : indep_) coords.push_back(symbols::coordinate(x));
  for (int g = 0; g <= k_; ++g) {
    for (int j = 0; j < n(); ++j) {
      for (const MultiIndex& I : indices_of_order(m(), g)) {
        Symbol s = symbols::coordinate(jet_name(j, I));
        classify_.emplace(s.id(), std::make_pair(j, I));
        coords.push_back(s);
      }
    }
  }
  chart_ = std::make_shared<Chart>(std::move(coords));
}

Symbol JetChart::base(int i) const { return chart_->coord(i); }

std::string JetChart::jet_name(int j, const MultiIndex& I) const {
  std::string name = dep_[j];
  if (I.order() > 0) {
    name += "_";
    for (uint8_t i : I.idx) name += indep_[i];
  }
  return name;
}

Symbol JetChart::jet(int j, const MultiIndex& I) const {
  Symbol s = symbols::find(jet_name(j, I));
  if (!s.valid() || !chart_->has(s)) throw Error("jet coordinate out of range");
  return s;
}

bool JetChart::is_base(Symbol s) const {
  int idx = chart_->index_of(s);
  return idx >= 0 && idx < m();
}

std::pair<int, MultiIndex> JetChart::classify(Symbol s) const {
  auto it = classify_.find(s.id());
  if (it == classify_.end()) throw Error("'" + s.name() + "' is not a derivative coordinate");
  return it->second;
}

std::vector<Symbol> JetChart::top_order() const {
  std::vector<Symbol> out;
  for (int j = 0; j < n(); ++j)
    for (const MultiIndex& I : indices_of_order(m(), k_)) out.push_back(jet(j, I));
  return out;
}

JetChartPtr build_jet_chart(const std::vector<std::string>& indep,
                            const std::vector<std::string>& dep, int k) {
  return std::make_shared<const JetChart>(indep, dep, k);
}

std::vector<Form> contact_system(const JetChartPtr& jc) {
  std::vector<Form> out;
  const ChartPtr& ch = jc->chart();
  for (int g = 0; g < jc->order(); ++g) {
    for (int j = 0; j < jc->n(); ++j) {
      for (const MultiIndex& I : JetChart::indices_of_order(jc->m(), g)) {
        Form th = Form::d_coord(ch, jc->jet(j, I));
        for (int i = 0; i < jc->m(); ++i) {
          Expr u_next = Expr::from_symbol(jc->jet(j, I.extended(static_cast<uint8_t>(i))));
          th = th - u_next * Form::d_coord(ch, jc->base(i));
        }
        out.push_back(std::move(th));
      }
    }
  }
  return out;
}

std::vector<VectorField> total_derivatives(const JetChartPtr& jc) {
  std::vector<VectorField> out;
  const ChartPtr& ch = jc->chart();
  for (int i = 0; i < jc->m(); ++i) {
    VectorField v(ch);
    v.set(jc->base(i), Expr::from_int(1));
    for (int g = 0; g < jc->order(); ++g)
      for (int j = 0; j < jc->n(); ++j)
        for (const MultiIndex& I : JetChart::indices_of_order(jc->m(), g))
          v.set(jc->jet(j, I), Expr::from_symbol(jc->jet(j, I.extended(static_cast<uint8_t>(i)))));
    out.push_back(std::move(v));
  }
  for (Symbol s : jc->top_order()) {
    VectorField v(ch);
    v.set(s, Expr::from_int(1));
    out.push_back(std::move(v));
  }
  return out;
}

JetProblem restrict_to_pde(const JetChartPtr& jc, const std::map<std::string, Expr>& solved,
                           const RestrictOptions& opts) {
  JetProblem p;
  p.jet = jc;

  std::vector<Symbol> top = jc->top_order();
  auto is_top = [&](Symbol s) {
    return std::find(top.begin(), top.end(), s) != top.end();
  };

  std::vector<std::pair<Symbol, Expr>> entries;
  for (const auto& [name, F] : solved) {
    Symbol key = symbols::find(name);
    if (!key.valid() || !jc->chart()->has(key))
      throw Error("solved key '" + name + "' is not a chart coordinate");
    if (!is_top(key)) throw Error("solved key '" + name + "' is not a top-order derivative");
    entries.emplace_back(key, F);
  }
  // order keys by chart position for determinism
  std::sort(entries.begin(), entries.end(), [&](const auto& a, const auto& b) {
    return jc->chart()->index_of(a.first) < jc->chart()->index_of(b.first);
  });

  // substitute the solved map into itself until no key appears in any F
  for (size_t round = 0;; ++round) {
    bool pending = false;
    for (auto& [key, F] : entries)
      for (auto& [key2, F2] : entries)
        if (contains_symbol(F, key2)) pending = true;
    if (!pending) break;
    if (round > entries.size())
      throw Error("circular principal-derivative definitions in solved map");
    Substitution pass;
    for (auto& [key, F] : entries) pass.set(key, F);
    for (auto& [key, F] : entries) {
      if (contains_symbol(F, key))
        throw Error("F for '" + key.name() + "' mentions the principal derivative itself");
      F = pass.apply(F);
    }
  }
  for (auto& [key, F] : entries) {
    for (auto& [key2, F2] : entries)
      if (contains_symbol(F, key2))
        throw Error("F mentions principal derivative '" + key2.name() + "'");
    p.solved.set(key, F);
    p.principal.push_back(key);
  }

  // restricted chart: drop solved coordinates
  std::vector<Symbol> rest;
  for (Symbol s : jc->chart()->coords())
    if (!p.solved.has(s)) rest.push_back(s);
  p.restricted = std::make_shared<Chart>(std::move(rest));

  // parametric top-order coordinates in phi order
  std::vector<Symbol> para;
  for (Symbol s : top)
    if (!p.solved.has(s)) para.push_back(s);
  if (!opts.parametric_order.empty()) {
    std::vector<Symbol> reordered;
    for (const std::string& name : opts.parametric_order) {
      Symbol s = symbols::find(name);
      if (!s.valid() || std::find(para.begin(), para.end(), s) == para.end())
        throw Error("parametric_order entry '" + name + "' is not a parametric top-order coordinate");
      if (std::find(reordered.begin(), reordered.end(), s) != reordered.end())
        throw Error("parametric_order entry '" + name + "' repeated");
      reordered.push_back(s);
    }
    if (reordered.size() != para.size())
      throw Error("parametric_order must list every parametric top-order coordinate");
    para = std::move(reordered);
  }
  p.parametric = para;

  // restricted contact system
  for (int g = 0; g < jc->order(); ++g) {
    for (int j = 0; j < jc->n(); ++j) {
      for (const MultiIndex& I : JetChart::indices_of_order(jc->m(), g)) {
        Form th = Form::d_coord(p.restricted, jc->jet(j, I));
        for (int i = 0; i < jc->m(); ++i) {
          Symbol next = jc->jet(j, I.extended(static_cast<uint8_t>(i)));
          Expr comp = p.solved.has(next) ? *p.solved.find(next) : Expr::from_symbol(next);
          th = th - comp * Form::d_coord(p.restricted, jc->base(i));
        }
        p.theta_leading.push_back(jc->jet(j, I));
        p.theta.push_back(std::move(th));
      }
    }
  }

  // restricted total derivatives + vertical fields
  for (int i = 0; i < jc->m(); ++i) {
    VectorField v(p.restricted);
    v.set(jc->base(i), Expr::from_int(1));
    for (int g = 0; g < jc->order(); ++g) {
      for (int j = 0; j < jc->n(); ++j) {
        for (const MultiIndex& I : JetChart::indices_of_order(jc->m(), g)) {
          Symbol next = jc->jet(j, I.extended(static_cast<uint8_t>(i)));
          Expr comp = p.solved.has(next) ? *p.solved.find(next) : Expr::from_symbol(next);
          v.set(jc->jet(j, I), comp);
        }
      }
    }
    p.vessiot.push_back(std::move(v));
  }
  for (Symbol s : para) {
    VectorField v(p.restricted);
    v.set(s, Expr::from_int(1));
    p.vessiot.push_back(std::move(v));
  }
  return p;
}

const std::vector<VectorField>& vessiot_distribution(const JetProblem& p) { return p.vessiot; }

}  // namespace vessiot
