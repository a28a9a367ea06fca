#ifndef VESSIOT_SOLVE_HPP
#define VESSIOT_SOLVE_HPP

#include <vector>

#include "vessiot/expr.hpp"

namespace vessiot {

struct SolveOptions {
  // Unknowns the caller wants kept free; elimination prefers solving for the
  // others. Within a tier, later-registered unknowns are eliminated first.
  std::vector<Symbol> preferred_free;
};

struct LinearSolution {
  Substitution solution;           // dependent unknown -> expression in free ones
  std::vector<Symbol> free_unknowns;
  std::vector<Expr> pivots_assumed;  // non-constant pivots divided by
};

// Fraction-free elimination over the expression field. Equations must be
// degree <= 1 in every unknown (coefficients may be arbitrary expressions in
// the remaining chart symbols). Throws NonlinearSystem / InconsistentSystem.
LinearSolution solve_linear(const std::vector<Expr>& eqs, const std::vector<Symbol>& unknowns,
                            const SolveOptions& opts = {});

}  // namespace vessiot

#endif
