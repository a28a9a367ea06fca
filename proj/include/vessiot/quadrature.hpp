#ifndef VESSIOT_QUADRATURE_HPP
#define VESSIOT_QUADRATURE_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vessiot/invariance.hpp"

namespace vessiot {

struct InvariantFunction {
  Expr expression;
  std::string label;  // f^i, i = dual-basis slot
  enum class Provenance { AutomaticQuadrature, UserSuppliedVerified } provenance =
      Provenance::AutomaticQuadrature;
};

// Dual 1-forms omega^i with omega^i(X_j) = delta_ij. Throws DegenerateGeometry
// when the certificate vanishes identically.
std::vector<Form> dual_basis(const SolvableStructure& s, const FactoredForm& omega);

// Coordinate-sequential potential of a closed 1-form. Throws
// OutsideQuadratureClass or Error("not closed") with the offending component.
Expr potential(const Form& one_form);

struct QuadratureOptions {
  // slot (1-based dual index) -> user-supplied potential, verified instead of
  // integrated when quadrature fails or the entry is present.
  std::map<int, Expr> supplied;
};

// Theorem-ordered integration: slots omega^k, omega^{k-1}, ... each reduced
// modulo the exact forms already found (affine-in-gamma coefficients solved
// as a linear system), checked closed, then integrated.
std::vector<InvariantFunction> integrate_structure(const SolvableStructure& s,
                                                   const FactoredForm& omega,
                                                   const QuadratureOptions& opts = {});

struct InvariantReport {
  struct Item {
    std::string invariant;
    std::string field;
    bool pass = true;
    std::string detail;
  };
  bool pass = true;
  bool independent = true;  // df^1 ^ ... ^ df^k != 0
  std::vector<Item> items;
};

// Reduced Vessiot fields of a fully assigned system.
std::vector<VectorField> reduced_distribution(const AugmentedSystem& a);

InvariantReport verify_invariants(const std::vector<InvariantFunction>& fs, const JetProblem& p,
                                  const AugmentedSystem& a);

struct SolutionCandidate {
  std::map<std::string, Expr> components;          // dependent var -> g(x; c)
  std::vector<Symbol> constants;                   // level-set constants c_i
  std::map<std::string, Expr> eliminated;          // jet coordinate -> value
  std::vector<Expr> pivots_assumed;
};

struct ProjectOptions {
  std::vector<std::string> elimination_order;  // optional coordinate order
};

// Solves the level-set system f^i = c_i for the dependent variables and all
// jet coordinates; cross-checks that derivatives of the result reproduce the
// eliminated jet values. Throws Error("elimination stuck ...").
SolutionCandidate project_solution(const std::vector<InvariantFunction>& fs, const JetProblem& p,
                                   const ProjectOptions& opts = {});

struct SolutionReport {
  struct Item {
    std::string residual;  // which PDE
    bool pass = true;
    bool symbolic = true;  // false = numeric sampling verdict
    std::string detail;
  };
  bool pass = true;
  std::vector<Item> items;
};

struct CheckOptions {
  int samples = 50;
  double tolerance = 1e-9;
  double exclusion = 1e-3;  // neighbourhood of singular loci to avoid
};

SolutionReport check_solution(const JetProblem& p, const SolutionCandidate& sol,
                              const CheckOptions& opts = {});

// Tangency of the declared symmetry fields to the prolonged solution graph.
SolutionReport check_graph_invariance(const JetProblem& p, const SolutionCandidate& sol,
                                      const std::vector<VectorField>& fields,
                                      const CheckOptions& opts = {});

}  // namespace vessiot

#endif
