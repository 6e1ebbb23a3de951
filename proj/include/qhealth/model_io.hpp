#pragma once
// Loader for `*.model` files: dependency graph declarations, value domains,
// entities and the home grid, all written as ground facts.

#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "qhealth/context.hpp"
#include "qhealth/core.hpp"
#include "qhealth/facts.hpp"

namespace qhealth {

struct Model {
  DependencyGraph graph;
  EntityModel entities;
  std::map<std::string, Scale> scales;  // by scale name, builtins included
};

class ModelError : public std::runtime_error {
 public:
  explicit ModelError(std::vector<Violation> violations)
      : std::runtime_error(summarize(violations)), violations_(std::move(violations)) {}
  const std::vector<Violation>& violations() const noexcept { return violations_; }

 private:
  static std::string summarize(const std::vector<Violation>& vs) {
    std::string s = "model has " + std::to_string(vs.size()) + " violation(s)";
    for (const auto& v : vs) s += "\n  [" + std::string(to_string(v.kind)) + "] " + v.subject + ": " + v.message;
    return s;
  }
  std::vector<Violation> violations_;
};

namespace detail {

struct ModelBuilder {
  std::vector<Indicator> indicators;
  std::vector<Item> items;
  std::vector<Arc> arcs;
  std::map<std::string, std::size_t> indicator_pos, item_pos;
  std::set<Arc> arc_seen;
  std::map<std::string, Scale> scales;
  std::vector<std::pair<std::string, ValueDomain>> domain_overrides;
  std::vector<std::pair<std::string, std::string>> domain_refs;  // node -> scale name
  EntityModel entities;
  std::vector<Violation> violations;

  ModelBuilder() {
    for (auto& s : scales::builtin()) scales.emplace(s.name, s);
  }

  void bad(const PositionedFact& pf, const std::string& msg) {
    violations.push_back({Violation::Kind::bad_declaration,
                          to_string(pf.fact) + " at " + std::to_string(pf.line) + ":" + std::to_string(pf.column),
                          msg});
  }

  static bool symbols(const Fact& f) {
    for (const auto& a : f.args)
      if (!a.is_symbol()) return false;
    return true;
  }

  void add(const PositionedFact& pf, std::vector<Diagnostic>* warnings) {
    const Fact& f = pf.fact;
    const std::string sig = f.signature();

    if (sig == "indicator/2") {
      if (!symbols(f)) return bad(pf, "expected indicator(name, source)");
      auto kind = source_kind_from_string(f.args[1].name);
      if (!kind) return bad(pf, "unknown indicator source '" + f.args[1].name + "'");
      const auto& name = f.args[0].name;
      if (auto it = indicator_pos.find(name); it != indicator_pos.end()) {
        if (indicators[it->second].source_kind != *kind) bad(pf, "indicator redeclared with a different source");
        return;
      }
      indicator_pos.emplace(name, indicators.size());
      indicators.push_back({name, *kind, scales::test()});
    } else if (sig == "item/2") {
      if (!symbols(f)) return bad(pf, "expected item(name, class)");
      auto cls = item_class_from_string(f.args[1].name);
      if (!cls) return bad(pf, "unknown item class '" + f.args[1].name + "'");
      const auto& name = f.args[0].name;
      if (auto it = item_pos.find(name); it != item_pos.end()) {
        if (items[it->second].item_class != *cls) bad(pf, "item redeclared with a different class");
        return;
      }
      item_pos.emplace(name, items.size());
      items.push_back({name, *cls, *cls == ItemClass::adl ? ValueDomain{scales::adl()} : ValueDomain{scales::severity()}});
    } else if (sig == "link/3" || sig == "influence/3") {
      if (!symbols(f)) return bad(pf, "expected " + f.predicate + "(type, source, target)");
      auto kind = arc_type_from_string(f.args[0].name);
      if (!kind) return bad(pf, "unknown arc type '" + f.args[0].name + "'");
      Arc a{f.args[1].name, f.args[2].name, *kind,
            f.predicate == "link" ? ArcLayer::indicator_to_item : ArcLayer::item_to_item};
      if (arc_seen.insert(a).second) arcs.push_back(std::move(a));
    } else if (f.predicate == "scale" && f.arity() >= 2) {
      if (!symbols(f)) return bad(pf, "scale levels must be symbols");
      Scale s{f.args[0].name, {}};
      for (std::size_t i = 1; i < f.args.size(); ++i) s.levels.push_back(f.args[i].name);
      if (auto it = scales.find(s.name); it != scales.end() && it->second != s)
        return bad(pf, "scale '" + s.name + "' redeclared with different levels");
      scales[s.name] = std::move(s);
    } else if (sig == "domain/2") {
      if (!symbols(f)) return bad(pf, "expected domain(node, scale)");
      domain_refs.emplace_back(f.args[0].name, f.args[1].name);
    } else if (sig == "numeric/4") {
      if (!f.args[0].is_symbol() || !f.args[1].is_int() || !f.args[2].is_int() || !f.args[3].is_symbol())
        return bad(pf, "expected numeric(node, Lo, Hi, higher|lower)");
      const auto& dir = f.args[3].name;
      if (dir != "higher" && dir != "lower") return bad(pf, "direction must be 'higher' or 'lower'");
      if (f.args[1].number > f.args[2].number) return bad(pf, "empty numeric range");
      domain_overrides.emplace_back(f.args[0].name,
                                    NumericRange{f.args[1].number, f.args[2].number, dir == "higher"});
    } else if (sig == "person/1") {
      if (!symbols(f)) return bad(pf, "expected person(name)");
      entities.persons.insert(f.args[0].name);
    } else if (sig == "room/1") {
      if (!symbols(f)) return bad(pf, "expected room(name)");
      entities.rooms.insert(f.args[0].name);
    } else if (sig == "area/2") {
      if (!symbols(f)) return bad(pf, "expected area(name, room)");
      auto [it, fresh] = entities.areas.emplace(f.args[0].name, f.args[1].name);
      if (!fresh && it->second != f.args[1].name)
        bad(pf, "area '" + f.args[0].name + "' already belongs to room '" + it->second + "'");
    } else if (sig == "object/2") {
      if (!symbols(f)) return bad(pf, "expected object(name, place)");
      auto [it, fresh] = entities.objects.emplace(f.args[0].name, f.args[1].name);
      if (!fresh && it->second != f.args[1].name) bad(pf, "object placed twice");
    } else if (sig == "cell/4") {
      if (!f.args[0].is_int() || !f.args[1].is_int() || !f.args[2].is_symbol() || !f.args[3].is_symbol())
        return bad(pf, "expected cell(X, Y, Room, Area)");
      CellPos p{f.args[0].number, f.args[1].number};
      Cell c{p, f.args[2].name, f.args[3].name};
      auto [it, fresh] = entities.grid.cells.emplace(p, c);
      if (!fresh && it->second != c) bad(pf, "cell " + to_string(p) + " already belongs to " + it->second.room);
    } else if (sig == "wall/2") {
      if (!f.args[0].is_int() || !f.args[1].is_int()) return bad(pf, "expected wall(X, Y)");
      entities.grid.walls.insert({f.args[0].number, f.args[1].number});
    } else if (sig == "passage/6") {
      const auto& a = f.args;
      if (!a[0].is_int() || !a[1].is_int() || !a[2].is_symbol() || !a[3].is_symbol() || !a[4].is_symbol() ||
          !a[5].is_symbol())
        return bad(pf, "expected passage(X, Y, R1, A1, R2, A2)");
      entities.grid.passages.push_back({{a[0].number, a[1].number}, a[2].name, a[3].name, a[4].name, a[5].name});
    } else if (sig == "data_ex/3") {
      if (!f.args[0].is_symbol() || !f.args[1].is_int() || !f.args[2].is_int())
        return bad(pf, "expected data_ex(Sensor, X, Y)");
      entities.grid.expected[{f.args[1].number, f.args[2].number}].insert(f.args[0].name);
    } else if (warnings) {
      warnings->push_back({pf.line, pf.column, "ignoring unknown model statement '" + sig + "'"});
    }
  }

  void apply_domains() {
    auto assign = [&](const std::string& node, const ValueDomain& d) {
      if (auto it = indicator_pos.find(node); it != indicator_pos.end()) {
        indicators[it->second].domain = d;
      } else if (auto jt = item_pos.find(node); jt != item_pos.end()) {
        items[jt->second].domain = d;
      } else {
        violations.push_back({Violation::Kind::unresolved_endpoint, node, "domain declared for undeclared node"});
      }
    };
    for (const auto& [node, scale_name] : domain_refs) {
      auto it = scales.find(scale_name);
      if (it == scales.end()) {
        violations.push_back({Violation::Kind::bad_declaration, node, "unknown scale '" + scale_name + "'"});
        continue;
      }
      assign(node, it->second);
    }
    for (const auto& [node, range] : domain_overrides) assign(node, range);
  }
};

}  // namespace detail

// Parses and validates a model. Throws ParseError for syntax errors and
// ModelError carrying every violation otherwise.
inline Model parse_model(std::string_view text, std::vector<Diagnostic>* warnings = nullptr) {
  detail::ModelBuilder b;
  for (const auto& pf : parse_statements(text)) b.add(pf, warnings);
  b.apply_domains();

  Model m;
  m.graph = DependencyGraph(std::move(b.indicators), std::move(b.items), std::move(b.arcs));
  m.entities = std::move(b.entities);
  m.scales = std::move(b.scales);

  std::vector<Violation> violations = std::move(b.violations);
  for (auto& v : validate_graph(m.graph)) violations.push_back(std::move(v));
  for (auto& v : validate_entities(m.entities)) violations.push_back(std::move(v));
  if (!violations.empty()) throw ModelError(std::move(violations));
  return m;
}

}  // namespace qhealth
