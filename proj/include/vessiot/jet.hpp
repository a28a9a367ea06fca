#ifndef VESSIOT_JET_HPP
#define VESSIOT_JET_HPP

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "vessiot/geom.hpp"

namespace vessiot {

// Nondecreasing tuple of independent-variable indices (0-based); mixed
// partials are identified by construction.
struct MultiIndex {
  std::vector<uint8_t> idx;

  static MultiIndex of(std::vector<uint8_t> raw);
  int order() const { return static_cast<int>(idx.size()); }
  MultiIndex extended(uint8_t i) const;
  bool operator==(const MultiIndex& o) const { return idx == o.idx; }
  bool operator<(const MultiIndex& o) const { return idx < o.idx; }
};

// J^k(R^m, R^n) coordinates: base variables, then derivative coordinates by
// increasing order, then dependent variable, then index lex.
class JetChart {
 public:
  JetChart(std::vector<std::string> indep, std::vector<std::string> dep, int k);

  int m() const { return static_cast<int>(indep_.size()); }
  int n() const { return static_cast<int>(dep_.size()); }
  int order() const { return k_; }
  const ChartPtr& chart() const { return chart_; }
  const std::vector<std::string>& indep_names() const { return indep_; }

  Symbol base(int i) const;
  Symbol jet(int j, const MultiIndex& I) const;
  std::string jet_name(int j, const MultiIndex& I) const;

  bool is_base(Symbol s) const;
  // dep index and multi-index of a derivative coordinate (order 0 = u^j itself)
  std::pair<int, MultiIndex> classify(Symbol s) const;
  std::vector<Symbol> top_order() const;
  static std::vector<MultiIndex> indices_of_order(int m, int g);

 private:
  std::vector<std::string> indep_;
  std::vector<std::string> dep_;
  int k_;
  ChartPtr chart_;
  std::map<uint32_t, std::pair<int, MultiIndex>> classify_;
};

using JetChartPtr = std::shared_ptr<const JetChart>;

JetChartPtr build_jet_chart(const std::vector<std::string>& indep,
                            const std::vector<std::string>& dep, int k);

// Contact forms theta^j_I = du^j_I - sum_i u^j_{I,i} dx^i on the full chart.
std::vector<Form> contact_system(const JetChartPtr& jc);

// Total-derivative fields plus the vertical fields over top-order coordinates.
std::vector<VectorField> total_derivatives(const JetChartPtr& jc);

struct JetProblem {
  JetChartPtr jet;
  ChartPtr restricted;
  Substitution solved;               // principal coordinate -> F
  std::vector<Symbol> principal;     // solved coordinates, chart order
  std::vector<Symbol> parametric;    // remaining top-order coordinates, phi order
  std::vector<Symbol> theta_leading;  // du^j_I coordinate of each theta
  std::vector<Form> theta;           // restricted contact system
  std::vector<VectorField> vessiot;  // restricted total derivatives + verticals
};

struct RestrictOptions {
  // Optional ordering of the parametric top-order coordinates (controls the
  // phi-form order and hence orientation signs downstream).
  std::vector<std::string> parametric_order;
};

JetProblem restrict_to_pde(const JetChartPtr& jc, const std::map<std::string, Expr>& solved,
                           const RestrictOptions& opts = {});

const std::vector<VectorField>& vessiot_distribution(const JetProblem& p);

}  // namespace vessiot

#endif
