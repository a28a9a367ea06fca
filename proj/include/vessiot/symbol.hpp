#ifndef VESSIOT_SYMBOL_HPP
#define VESSIOT_SYMBOL_HPP

#include <cstdint>
#include <string>
#include <vector>

namespace vessiot {

enum class SymbolKind : uint8_t {
  Coordinate,   // chart coordinate (base variable or jet coordinate)
  Parameter,    // constant parameter; all derivatives vanish
  Unknown,      // unknown coefficient function with a dependency set
  UnknownDeriv  // formal partial derivative of an Unknown
};

class Symbol {
 public:
  Symbol() = default;
  explicit Symbol(uint32_t id) : id_(id) {}

  uint32_t id() const { return id_; }
  bool valid() const { return id_ != 0; }

  const std::string& name() const;
  SymbolKind kind() const;
  bool is_coordinate() const { return kind() == SymbolKind::Coordinate; }

  // For Unknown/UnknownDeriv: the coordinates the function may depend on.
  // Dependency sets shrink in place during constraint propagation.
  std::vector<Symbol> dependencies() const;
  bool depends_on(Symbol coord) const;

  // UnknownDeriv accessors.
  Symbol base_unknown() const;                 // the underlying Unknown
  std::vector<Symbol> derivative_coords() const;  // sorted multiset

  bool declared_nonzero() const;

  bool operator==(Symbol o) const { return id_ == o.id_; }
  bool operator!=(Symbol o) const { return id_ != o.id_; }
  bool operator<(Symbol o) const { return id_ < o.id_; }

 private:
  uint32_t id_ = 0;
};

// Process-wide registry. Coordinates and parameters are interned by name;
// unknowns are minted fresh each time so distinct problems may reuse labels.
namespace symbols {

Symbol coordinate(const std::string& name);
Symbol parameter(const std::string& name, bool nonzero = false);
Symbol fresh_unknown(const std::string& name, const std::vector<Symbol>& deps);
// Formal partial of an unknown (or of an UnknownDeriv, in which case the
// coordinate multisets merge). Canonical: coordinate ids sorted.
Symbol derivative(Symbol unknown, Symbol coord);

// nullopt-style lookup: returns invalid Symbol if the name is not interned.
Symbol find(const std::string& name);

void shrink_dependencies(Symbol unknown, const std::vector<Symbol>& new_deps);
void declare_nonzero(Symbol s);

}  // namespace symbols

}  // namespace vessiot

#endif
