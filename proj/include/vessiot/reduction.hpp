#ifndef VESSIOT_REDUCTION_HPP
#define VESSIOT_REDUCTION_HPP

#include <string>
#include <vector>

#include "vessiot/jet.hpp"
#include "vessiot/solve.hpp"

namespace vessiot {

// Restricted contact system plus unknown-coefficient 1-forms
// phi^b = du_J - sum_i a_{(J,i)} dx^i.
struct AugmentedSystem {
  JetProblem problem;
  std::vector<Form> phis;
  std::vector<Symbol> unknowns;       // all minted coefficient functions
  std::vector<Symbol> free_unknowns;  // still undetermined
  Substitution applied;               // algebraic solution substituted so far
  std::vector<Expr> pivots_assumed;
  std::vector<Expr> retained_constraints;  // scaling/general cascade residuals

  std::vector<Form> all_forms() const;  // theta followed by phi
};

AugmentedSystem augment(const JetProblem& p);

struct ConditionSet {
  std::vector<Expr> algebraic;     // linear in the unknowns
  std::vector<Expr> differential;  // quasilinear first-order PDE residuals
};

// Coefficients of d theta^a ^ Omega_theta ^ Omega_phi, formal derivatives of
// the unknowns set aside.
ConditionSet algebraic_conditions(const AugmentedSystem& a);

AugmentedSystem solve_algebraic(const ConditionSet& c, const AugmentedSystem& a,
                                const SolveOptions& opts = {});

// Coefficients of d phi^b ^ Omega_theta ^ Omega_phi with formal derivative
// symbols kept. Requires the algebraic part already applied.
ConditionSet differential_conditions(const AugmentedSystem& a);

struct FrobeniusEntry {
  size_t form_index = 0;
  bool integrable = true;
  Tuple counterexample_tuple;
  Expr counterexample;
};

struct FrobeniusReport {
  bool integrable = true;
  std::vector<FrobeniusEntry> entries;
};

// d alpha^i ^ alpha^1 ^ ... ^ alpha^q = 0 per constraint form. Throws
// DegenerateGeometry on dependent input forms.
FrobeniusReport frobenius_check(const std::vector<Form>& forms);

// Substitutes an assignment for every remaining unknown into the residuals of
// both condition groups (derivative symbols chain through the assignment).
std::vector<Expr> substitute_conditions(const std::vector<Expr>& conds, const Substitution& s);

// Condition residual normalization shared by the extraction passes: drops
// rational content, fixes the leading sign, removes duplicates.
void normalize_conditions(std::vector<Expr>& conds);

}  // namespace vessiot

#endif
