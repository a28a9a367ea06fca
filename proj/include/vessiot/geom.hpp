#ifndef VESSIOT_GEOM_HPP
#define VESSIOT_GEOM_HPP

#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "vessiot/expr.hpp"

namespace vessiot {

// Ordered coordinate chart; the order fixes basis-form orientation signs.
class Chart {
 public:
  explicit Chart(std::vector<Symbol> coords);
  size_t dim() const { return coords_.size(); }
  const std::vector<Symbol>& coords() const { return coords_; }
  Symbol coord(size_t i) const { return coords_[i]; }
  int index_of(Symbol s) const;
  bool has(Symbol s) const { return index_of(s) >= 0; }

 private:
  std::vector<Symbol> coords_;
  std::map<uint32_t, int> index_;
};

using ChartPtr = std::shared_ptr<const Chart>;

// strictly increasing coordinate indices
using Tuple = std::vector<uint8_t>;

// Exterior form with sparse tuple-keyed coefficients.
class Form {
 public:
  Form() = default;
  Form(ChartPtr chart, int degree);
  static Form scalar(ChartPtr chart, Expr e);
  static Form d_coord(ChartPtr chart, Symbol s);

  int degree() const { return degree_; }
  const ChartPtr& chart() const { return chart_; }
  const std::map<Tuple, Expr>& coeffs() const { return coeffs_; }

  void add_to(const Tuple& t, const Expr& e);
  Expr coeff(const Tuple& t) const;
  // True when every stored coefficient is the canonical zero.
  bool is_zero_form() const { return coeffs_.empty(); }

 private:
  ChartPtr chart_;
  int degree_ = 0;
  std::map<Tuple, Expr> coeffs_;
};

class VectorField {
 public:
  VectorField() = default;
  explicit VectorField(ChartPtr chart) : chart_(std::move(chart)) {}
  const ChartPtr& chart() const { return chart_; }
  void set(Symbol coord, Expr e);
  Expr component(Symbol coord) const;
  const std::map<int, Expr>& components() const { return comps_; }
  bool is_zero_field() const { return comps_.empty(); }

 private:
  ChartPtr chart_;
  std::map<int, Expr> comps_;  // coordinate index -> component
};

Form operator+(const Form& a, const Form& b);
Form operator-(const Form& a, const Form& b);
Form operator-(const Form& a);
Form operator*(const Expr& s, const Form& a);
Form operator/(const Form& a, const Expr& s);

// OpenMP kernel with deterministic merge; wedge_serial is the reference
// implementation the tests compare against.
Form wedge(const Form& a, const Form& b);
Form wedge_serial(const Form& a, const Form& b);
Form multi_wedge(std::span<const Form> forms);

Form ext_d(const Form& a);
Form ext_d_serial(const Form& a);

Form contract(const VectorField& x, const Form& a);
Expr pairing(const Form& one_form, const VectorField& x);

// Cartan homotopy formula: L_X = X . d + d (X . )
Form lie_derivative(const VectorField& x, const Form& a);

// Full contraction in order: evaluate(a, {X1..Xp}) = a(X1,...,Xp).
Expr evaluate(const Form& a, std::span<const VectorField> fields);

// Lie bracket [X, Y].
VectorField bracket(const VectorField& x, const VectorField& y);

VectorField apply_substitution(const VectorField& x, const Substitution& s);
Form apply_substitution(const Form& a, const Substitution& s);

// Decomposable form kept as an ordered list of 1-form factors.
struct FactoredForm {
  ChartPtr chart;
  std::vector<Form> factors;
  Form expanded() const;
};

struct ContractionResult {
  FactoredForm factors;  // one factor fewer
  Expr multiple;         // contract(X, f.expanded()) == multiple * factors.expanded()
};

// Pivot-factor construction; throws DegenerateGeometry("contraction vanishes")
// when every factor annihilates X.
ContractionResult contract_factors(const VectorField& x, const FactoredForm& f);

std::string to_string(const Form& a);
std::string to_string(const VectorField& x);

}  // namespace vessiot

#endif
