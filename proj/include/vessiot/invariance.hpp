#ifndef VESSIOT_INVARIANCE_HPP
#define VESSIOT_INVARIANCE_HPP

#include <string>
#include <vector>

#include "vessiot/reduction.hpp"

namespace vessiot {

// Ordered symmetry fields X_1..X_k, k = count(theta) + count(phi).
struct SolvableStructure {
  std::vector<VectorField> fields;
};

// Adds multiples of the theta forms to each phi so that phi^b(X_i) = 0 for
// the first n-p fields (the symmetries of the original PDE).
AugmentedSystem normalize_betas(const AugmentedSystem& a, const SolvableStructure& s);

// evaluate(Omega_theta ^ Omega_phi, X_1..X_k); its zero set is the excluded
// genericity locus.
Expr independence_certificate(const AugmentedSystem& a, const SolvableStructure& s);

struct Constraint {
  enum class Kind { VanishingPartial, Scaling, General };
  Kind kind = Kind::General;
  int stage = 0;  // 1-based symmetry stage
  Expr residual;
  Symbol unknown;  // VanishingPartial / Scaling
  Symbol coord;    // VanishingPartial
  // Scaling: residual is sum_w c_w * w * D(a,w) + shift * a after content
  // extraction; weights hold the characteristic exponents.
  std::vector<std::pair<Symbol, Rational>> weights;
  Rational shift = 0;
};

struct ConstraintSet {
  std::vector<Constraint> items;
  // Nonvanishing assumed while triangularizing stage residuals.
  std::vector<Expr> pivots_assumed;
};

// Stage i emits, per 1-form factor alpha of the cascade form, the
// coefficients of wedge(L_{X_i} alpha, Omega_i); the proportionality factors
// are never constructed. Throws CascadeDegenerates when the interior product
// of a stage vanishes.
ConstraintSet symmetry_constraints(const AugmentedSystem& a, const SolvableStructure& s);

// Vanishing-partial constraints shrink dependency sets; scaling and general
// constraints are retained in the system ledger for verify_ansatz.
AugmentedSystem propagate_constraints(const ConstraintSet& c, const AugmentedSystem& a);

// Closure residuals d(omega) = 0 for the quotient 1-form dual to the last
// field, and for every member of the maximal commuting tail.
std::vector<Expr> closure_conditions(const AugmentedSystem& a, const SolvableStructure& s);

// Indices (0-based) of the maximal pairwise-commuting suffix of the fields.
std::vector<size_t> commuting_tail(const SolvableStructure& s);

struct AnsatzReport {
  struct Item {
    std::string group;  // algebraic | differential | retained | closure | certificate
    std::string name;
    bool pass = true;
    std::string detail;
  };
  bool pass = true;
  std::vector<Item> items;
};

// Substitutes an assignment for every free unknown and itemizes all five
// condition groups. Throws Error on incomplete assignments or dependency
// violations.
AnsatzReport verify_ansatz(const AugmentedSystem& a, const SolvableStructure& s,
                           const Substitution& assignment);

// The assigned system (phis substituted, no free unknowns left).
AugmentedSystem assign(const AugmentedSystem& a, const Substitution& assignment);

}  // namespace vessiot

#endif
