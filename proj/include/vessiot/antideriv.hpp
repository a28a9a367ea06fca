#ifndef VESSIOT_ANTIDERIV_HPP
#define VESSIOT_ANTIDERIV_HPP

#include "vessiot/expr.hpp"

namespace vessiot {

// Heuristic antiderivative over the supported quadrature class: power rule
// (including rational powers of arguments linear in v), 1/u for u linear in
// v, and polynomial * exp(linear) by iterated integration by parts.
// Throws OutsideQuadratureClass when no rule applies.
Expr antiderivative(const Expr& e, Symbol v);

}  // namespace vessiot

#endif
