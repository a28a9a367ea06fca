#include "vessiot/symbol.hpp"

#include <algorithm>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>

#include "vessiot/errors.hpp"

namespace vessiot {

namespace {

struct SymbolData {
  std::string name;
  SymbolKind kind = SymbolKind::Coordinate;
  bool nonzero = false;
  std::vector<uint32_t> deps;         // Unknown / UnknownDeriv
  uint32_t base = 0;                  // UnknownDeriv: the Unknown it derives
  std::vector<uint32_t> der_coords;   // UnknownDeriv: sorted coordinate ids
};

struct Registry {
  std::shared_mutex mtx;
  std::vector<SymbolData> rows{SymbolData{}};  // id 0 reserved
  std::map<std::string, uint32_t> interned;    // coordinates + parameters
  std::map<std::pair<uint32_t, std::vector<uint32_t>>, uint32_t> derivs;
};

Registry& reg() {
  static Registry* r = new Registry();
  return *r;
}

uint32_t push_row(Registry& r, SymbolData d) {
  r.rows.push_back(std::move(d));
  return static_cast<uint32_t>(r.rows.size() - 1);
}

}  // namespace

const std::string& Symbol::name() const {
  std::shared_lock lk(reg().mtx);
  return reg().rows[id_].name;
}

SymbolKind Symbol::kind() const {
  std::shared_lock lk(reg().mtx);
  return reg().rows[id_].kind;
}

std::vector<Symbol> Symbol::dependencies() const {
  std::shared_lock lk(reg().mtx);
  const SymbolData& d = reg().rows[id_];
  const SymbolData& src = d.kind == SymbolKind::UnknownDeriv ? reg().rows[d.base] : d;
  std::vector<Symbol> out;
  out.reserve(src.deps.size());
  for (uint32_t id : src.deps) out.push_back(Symbol(id));
  return out;
}

bool Symbol::depends_on(Symbol coord) const {
  std::shared_lock lk(reg().mtx);
  const SymbolData& d = reg().rows[id_];
  const SymbolData& src = d.kind == SymbolKind::UnknownDeriv ? reg().rows[d.base] : d;
  return std::find(src.deps.begin(), src.deps.end(), coord.id()) != src.deps.end();
}

Symbol Symbol::base_unknown() const {
  std::shared_lock lk(reg().mtx);
  const SymbolData& d = reg().rows[id_];
  return d.kind == SymbolKind::UnknownDeriv ? Symbol(d.base) : *this;
}

std::vector<Symbol> Symbol::derivative_coords() const {
  std::shared_lock lk(reg().mtx);
  const SymbolData& d = reg().rows[id_];
  std::vector<Symbol> out;
  for (uint32_t id : d.der_coords) out.push_back(Symbol(id));
  return out;
}

bool Symbol::declared_nonzero() const {
  std::shared_lock lk(reg().mtx);
  return reg().rows[id_].nonzero;
}

namespace symbols {

Symbol coordinate(const std::string& name) {
  Registry& r = reg();
  std::unique_lock lk(r.mtx);
  auto it = r.interned.find(name);
  if (it != r.interned.end()) {
    if (r.rows[it->second].kind != SymbolKind::Coordinate)
      throw Error("symbol '" + name + "' already registered with a different kind");
    return Symbol(it->second);
  }
  SymbolData d;
  d.name = name;
  d.kind = SymbolKind::Coordinate;
  uint32_t id = push_row(r, std::move(d));
  r.interned.emplace(name, id);
  return Symbol(id);
}

Symbol parameter(const std::string& name, bool nonzero) {
  Registry& r = reg();
  std::unique_lock lk(r.mtx);
  auto it = r.interned.find(name);
  if (it != r.interned.end()) {
    if (r.rows[it->second].kind != SymbolKind::Parameter)
      throw Error("symbol '" + name + "' already registered with a different kind");
    if (nonzero) r.rows[it->second].nonzero = true;
    return Symbol(it->second);
  }
  SymbolData d;
  d.name = name;
  d.kind = SymbolKind::Parameter;
  d.nonzero = nonzero;
  uint32_t id = push_row(r, std::move(d));
  r.interned.emplace(name, id);
  return Symbol(id);
}

Symbol fresh_unknown(const std::string& name, const std::vector<Symbol>& deps) {
  Registry& r = reg();
  std::unique_lock lk(r.mtx);
  SymbolData d;
  d.name = name;
  d.kind = SymbolKind::Unknown;
  for (Symbol s : deps) d.deps.push_back(s.id());
  return Symbol(push_row(r, std::move(d)));
}

Symbol derivative(Symbol unknown, Symbol coord) {
  Registry& r = reg();
  std::unique_lock lk(r.mtx);
  const SymbolData& u = r.rows[unknown.id()];
  uint32_t base = unknown.id();
  std::vector<uint32_t> coords;
  if (u.kind == SymbolKind::UnknownDeriv) {
    base = u.base;
    coords = u.der_coords;
  } else if (u.kind != SymbolKind::Unknown) {
    throw Error("derivative symbol requested for non-unknown '" + u.name + "'");
  }
  coords.push_back(coord.id());
  std::sort(coords.begin(), coords.end());
  auto key = std::make_pair(base, coords);
  auto it = r.derivs.find(key);
  if (it != r.derivs.end()) return Symbol(it->second);
  SymbolData d;
  d.name = "D(" + r.rows[base].name;
  for (uint32_t c : coords) d.name += "," + r.rows[c].name;
  d.name += ")";
  d.kind = SymbolKind::UnknownDeriv;
  d.base = base;
  d.der_coords = coords;
  uint32_t id = push_row(r, std::move(d));
  r.derivs.emplace(key, id);
  return Symbol(id);
}

Symbol find(const std::string& name) {
  Registry& r = reg();
  std::shared_lock lk(r.mtx);
  auto it = r.interned.find(name);
  return it == r.interned.end() ? Symbol() : Symbol(it->second);
}

void shrink_dependencies(Symbol unknown, const std::vector<Symbol>& new_deps) {
  Registry& r = reg();
  std::unique_lock lk(r.mtx);
  SymbolData& d = r.rows[unknown.id()];
  if (d.kind != SymbolKind::Unknown)
    throw Error("dependency update on non-unknown '" + d.name + "'");
  std::vector<uint32_t> nd;
  for (Symbol s : new_deps) {
    if (std::find(d.deps.begin(), d.deps.end(), s.id()) == d.deps.end())
      throw Error("dependency set of '" + d.name + "' may only shrink");
    nd.push_back(s.id());
  }
  d.deps = std::move(nd);
}

void declare_nonzero(Symbol s) {
  Registry& r = reg();
  std::unique_lock lk(r.mtx);
  r.rows[s.id()].nonzero = true;
}

}  // namespace symbols

}  // namespace vessiot
