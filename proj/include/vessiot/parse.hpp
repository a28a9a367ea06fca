#ifndef VESSIOT_PARSE_HPP
#define VESSIOT_PARSE_HPP

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "vessiot/expr.hpp"

namespace vessiot {

// Name resolution for the documented expression grammar. Identifiers must be
// registered here (coordinates, parameters, unknown labels, opaque function
// labels); anything else is a parse error naming the token.
struct ParseContext {
  std::map<std::string, Symbol> names;

  void add(Symbol s) { names[s.name()] = s; }
  void add(const std::string& alias, Symbol s) { names[alias] = s; }
};

Expr parse_expression(const std::string& text, const ParseContext& ctx);

// Vector field grammar: a sum of coefficient * D(coordinate) summands.
std::vector<std::pair<Symbol, Expr>> parse_vector_field(const std::string& text,
                                                        const ParseContext& ctx);

}  // namespace vessiot

#endif
