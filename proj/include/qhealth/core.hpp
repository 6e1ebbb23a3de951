#pragma once
// Domain vocabulary for qualitative health reasoning: signs, arc types,
// value scales and the two-layer indicator/item dependency graph.

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

namespace qhealth {

// Differential sign of a node between two consecutive cycles.
// Numeric encoding follows the fact format: -1 worse, 0 unchanged, +1 better.
enum class Sign : std::int8_t { minus = -1, zero = 0, plus = 1, unknown = 2 };

inline constexpr std::array<Sign, 4> all_signs{Sign::unknown, Sign::minus, Sign::zero, Sign::plus};
inline constexpr std::array<Sign, 3> determinate_signs{Sign::minus, Sign::zero, Sign::plus};

constexpr bool is_determinate(Sign s) noexcept { return s != Sign::unknown; }

// Total order used for canonical sorting and tie-breaks: ? < - < = < +.
constexpr int sign_rank(Sign s) noexcept {
  switch (s) {
    case Sign::unknown: return 0;
    case Sign::minus: return 1;
    case Sign::zero: return 2;
    case Sign::plus: return 3;
  }
  return 0;
}

constexpr Sign negate(Sign s) noexcept {
  switch (s) {
    case Sign::plus: return Sign::minus;
    case Sign::minus: return Sign::plus;
    default: return s;
  }
}

inline std::string_view symbol(Sign s) noexcept {
  switch (s) {
    case Sign::plus: return "+";
    case Sign::minus: return "-";
    case Sign::zero: return "=";
    case Sign::unknown: return "?";
  }
  return "?";
}

// Fact-format spelling: the integers -1/0/1, or the symbol `unknown`.
inline std::string to_fact_token(Sign s) {
  switch (s) {
    case Sign::plus: return "1";
    case Sign::minus: return "-1";
    case Sign::zero: return "0";
    case Sign::unknown: return "unknown";
  }
  return "unknown";
}

inline std::optional<Sign> sign_from_int(std::int64_t v) noexcept {
  if (v == 1) return Sign::plus;
  if (v == -1) return Sign::minus;
  if (v == 0) return Sign::zero;
  return std::nullopt;
}

enum class ArcType : std::uint8_t { pos, neg, invP, invN, dir, inv };

inline constexpr std::array<ArcType, 6> all_arc_types{ArcType::pos,  ArcType::neg, ArcType::invP,
                                                      ArcType::invN, ArcType::dir, ArcType::inv};

inline std::string_view to_string(ArcType k) noexcept {
  switch (k) {
    case ArcType::pos: return "pos";
    case ArcType::neg: return "neg";
    case ArcType::invP: return "invP";
    case ArcType::invN: return "invN";
    case ArcType::dir: return "dir";
    case ArcType::inv: return "inv";
  }
  return "pos";
}

inline std::optional<ArcType> arc_type_from_string(std::string_view s) noexcept {
  for (ArcType k : all_arc_types)
    if (to_string(k) == s) return k;
  return std::nullopt;
}

// Effect of a single dependency arc on its target, given the source's sign.
//
//   source | pos neg invP invN dir inv
//   -------+-----------------------------
//     +    |  +   ?   -    ?    +   -
//     -    |  ?   -   ?    +    -   +
//     =    |  =   =   =    =    =   =
//     ?    |  ?   ?   ?    ?    ?   ?
constexpr Sign arc_effect(Sign source, ArcType kind) noexcept {
  if (source == Sign::zero || source == Sign::unknown) return source;
  const bool up = source == Sign::plus;
  switch (kind) {
    case ArcType::pos: return up ? Sign::plus : Sign::unknown;
    case ArcType::neg: return up ? Sign::unknown : Sign::minus;
    case ArcType::invP: return up ? Sign::minus : Sign::unknown;
    case ArcType::invN: return up ? Sign::unknown : Sign::plus;
    case ArcType::dir: return up ? Sign::plus : Sign::minus;
    case ArcType::inv: return up ? Sign::minus : Sign::plus;
  }
  return Sign::unknown;
}

// ---------------------------------------------------------------------------
// Value scales

using Value = std::variant<std::int64_t, std::string>;

inline std::string to_string(const Value& v) {
  if (const auto* i = std::get_if<std::int64_t>(&v)) return std::to_string(*i);
  return std::get<std::string>(v);
}

// Ordered severity scale, listed from best (index 0) to worst.
struct Scale {
  std::string name;
  std::vector<std::string> levels;

  std::optional<int> rank(std::string_view level) const {
    for (std::size_t i = 0; i < levels.size(); ++i)
      if (levels[i] == level) return static_cast<int>(i);
    return std::nullopt;
  }
  bool operator==(const Scale&) const = default;
};

struct NumericRange {
  std::int64_t lo = 0;
  std::int64_t hi = 0;
  bool higher_is_better = true;
  bool operator==(const NumericRange&) const = default;
};

using ValueDomain = std::variant<Scale, NumericRange>;

namespace scales {
inline Scale severity() { return {"severity", {"absent", "mild", "moderate", "severe"}}; }
inline Scale test() { return {"test", {"ok", "mild", "moderate", "severe"}}; }
inline Scale adl() { return {"adl", {"ok", "needy", "dependent"}}; }
inline Scale sleep() { return {"sleep", {"ok", "mild", "moderate", "consistent"}}; }
inline Scale yes_no() { return {"yesno", {"no", "yes"}}; }
inline std::vector<Scale> builtin() { return {severity(), test(), adl(), sleep(), yes_no()}; }
}  // namespace scales

class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Severity rank of `v` in `domain`; larger is worse. Throws DomainError when
// the value does not belong to the domain.
inline std::int64_t severity_of(const Value& v, const ValueDomain& domain) {
  if (const auto* scale = std::get_if<Scale>(&domain)) {
    const auto* s = std::get_if<std::string>(&v);
    if (!s) throw DomainError("numeric value " + to_string(v) + " on scale '" + scale->name + "'");
    auto r = scale->rank(*s);
    if (!r) throw DomainError("value '" + *s + "' not in scale '" + scale->name + "'");
    return *r;
  }
  const auto& range = std::get<NumericRange>(domain);
  const auto* i = std::get_if<std::int64_t>(&v);
  if (!i) throw DomainError("symbolic value '" + to_string(v) + "' in numeric range");
  if (*i < range.lo || *i > range.hi)
    throw DomainError("value " + std::to_string(*i) + " outside [" + std::to_string(range.lo) + "," +
                      std::to_string(range.hi) + "]");
  return range.higher_is_better ? -*i : *i;
}

// ---------------------------------------------------------------------------
// Graph nodes and arcs

enum class SourceKind : std::uint8_t { human_input, aggregation, inference };
enum class ItemClass : std::uint8_t { state, functionalities, adl, risk };

inline std::string_view to_string(SourceKind k) noexcept {
  switch (k) {
    case SourceKind::human_input: return "human_input";
    case SourceKind::aggregation: return "aggregation";
    case SourceKind::inference: return "inference";
  }
  return "inference";
}

inline std::optional<SourceKind> source_kind_from_string(std::string_view s) noexcept {
  if (s == "human_input") return SourceKind::human_input;
  if (s == "aggregation") return SourceKind::aggregation;
  if (s == "inference") return SourceKind::inference;
  return std::nullopt;
}

inline std::string_view to_string(ItemClass c) noexcept {
  switch (c) {
    case ItemClass::state: return "state";
    case ItemClass::functionalities: return "functionalities";
    case ItemClass::adl: return "adl";
    case ItemClass::risk: return "risk";
  }
  return "state";
}

inline std::optional<ItemClass> item_class_from_string(std::string_view s) noexcept {
  if (s == "state") return ItemClass::state;
  if (s == "functionalities") return ItemClass::functionalities;
  if (s == "adl") return ItemClass::adl;
  if (s == "risk") return ItemClass::risk;
  return std::nullopt;
}

struct Indicator {
  std::string name;
  SourceKind source_kind = SourceKind::inference;
  ValueDomain domain = scales::test();
  bool operator==(const Indicator&) const = default;
};

struct Item {
  std::string name;
  ItemClass item_class = ItemClass::state;
  ValueDomain domain = scales::severity();
  bool operator==(const Item&) const = default;
};

// link(Type,Ind,I) arcs live in the indicator layer, influence(Type,I1,I2)
// arcs between items.
enum class ArcLayer : std::uint8_t { indicator_to_item, item_to_item };

struct Arc {
  std::string source;
  std::string target;
  ArcType kind = ArcType::pos;
  ArcLayer layer = ArcLayer::item_to_item;

  auto operator<=>(const Arc&) const = default;
};

inline std::string describe(const Arc& a) {
  return a.source + " -(" + std::string(to_string(a.kind)) + ")-> " + a.target;
}

inline bool is_identifier(std::string_view s) noexcept {
  if (s.empty()) return false;
  auto alpha = [](char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); };
  if (!alpha(s.front())) return false;
  for (char c : s)
    if (!alpha(c) && !(c >= '0' && c <= '9') && c != '_') return false;
  return true;
}

// Immutable once constructed. Arcs referencing undeclared nodes are kept so
// that validate_graph can report them; reasoning code assumes a valid graph.
class DependencyGraph {
 public:
  DependencyGraph() = default;

  DependencyGraph(std::vector<Indicator> indicators, std::vector<Item> items, std::vector<Arc> arcs)
      : indicators_(std::move(indicators)), items_(std::move(items)), arcs_(std::move(arcs)) {
    for (std::size_t i = 0; i < indicators_.size(); ++i) indicator_index_.emplace(indicators_[i].name, i);
    for (std::size_t i = 0; i < items_.size(); ++i) item_index_.emplace(items_[i].name, i);
    for (std::size_t a = 0; a < arcs_.size(); ++a) incoming_[arcs_[a].target].push_back(a);
  }

  const std::vector<Indicator>& indicators() const noexcept { return indicators_; }
  const std::vector<Item>& items() const noexcept { return items_; }
  const std::vector<Arc>& arcs() const noexcept { return arcs_; }

  const Indicator* find_indicator(std::string_view name) const {
    auto it = indicator_index_.find(std::string(name));
    return it == indicator_index_.end() ? nullptr : &indicators_[it->second];
  }
  const Item* find_item(std::string_view name) const {
    auto it = item_index_.find(std::string(name));
    return it == item_index_.end() ? nullptr : &items_[it->second];
  }
  bool has_node(std::string_view name) const { return find_indicator(name) || find_item(name); }

  // Indices into arcs() of every arc whose target is `node`, in declaration order.
  const std::vector<std::size_t>& incoming(std::string_view node) const {
    static const std::vector<std::size_t> none;
    auto it = incoming_.find(std::string(node));
    return it == incoming_.end() ? none : it->second;
  }

  std::vector<const Arc*> incoming_links(std::string_view item) const {
    std::vector<const Arc*> out;
    for (std::size_t a : incoming(item))
      if (arcs_[a].layer == ArcLayer::indicator_to_item) out.push_back(&arcs_[a]);
    return out;
  }
  std::vector<const Arc*> incoming_influences(std::string_view item) const {
    std::vector<const Arc*> out;
    for (std::size_t a : incoming(item))
      if (arcs_[a].layer == ArcLayer::item_to_item) out.push_back(&arcs_[a]);
    return out;
  }

  std::vector<std::string> items_of_class(ItemClass c) const {
    std::vector<std::string> out;
    for (const auto& it : items_)
      if (it.item_class == c) out.push_back(it.name);
    return out;
  }

  bool operator==(const DependencyGraph& o) const {
    return indicators_ == o.indicators_ && items_ == o.items_ && arcs_ == o.arcs_;
  }

 private:
  std::vector<Indicator> indicators_;
  std::vector<Item> items_;
  std::vector<Arc> arcs_;
  std::unordered_map<std::string, std::size_t> indicator_index_;
  std::unordered_map<std::string, std::size_t> item_index_;
  std::unordered_map<std::string, std::vector<std::size_t>> incoming_;
};

struct Violation {
  enum class Kind { unresolved_endpoint, layer, duplicate_node, bad_identifier, bad_declaration };
  Kind kind;
  std::string subject;
  std::string message;
  bool operator==(const Violation&) const = default;
};

inline std::string_view to_string(Violation::Kind k) noexcept {
  switch (k) {
    case Violation::Kind::unresolved_endpoint: return "unresolved-endpoint";
    case Violation::Kind::layer: return "layer";
    case Violation::Kind::duplicate_node: return "duplicate-node";
    case Violation::Kind::bad_identifier: return "bad-identifier";
    case Violation::Kind::bad_declaration: return "bad-declaration";
  }
  return "bad-declaration";
}

inline std::vector<Violation> validate_graph(const DependencyGraph& g) {
  std::vector<Violation> out;
  std::set<std::string> seen_ind;
  std::set<std::string> seen_item;
  for (const auto& ind : g.indicators()) {
    if (!is_identifier(ind.name))
      out.push_back({Violation::Kind::bad_identifier, ind.name, "indicator name is not an identifier"});
    if (!seen_ind.insert(ind.name).second)
      out.push_back({Violation::Kind::duplicate_node, ind.name, "indicator declared twice"});
  }
  for (const auto& it : g.items()) {
    if (!is_identifier(it.name))
      out.push_back({Violation::Kind::bad_identifier, it.name, "item name is not an identifier"});
    if (!seen_item.insert(it.name).second)
      out.push_back({Violation::Kind::duplicate_node, it.name, "item declared twice"});
    if (seen_ind.count(it.name))
      out.push_back({Violation::Kind::duplicate_node, it.name, "name used for both an indicator and an item"});
  }
  for (const auto& a : g.arcs()) {
    const std::string subject = describe(a);
    const bool src_known = g.has_node(a.source);
    const bool dst_known = g.has_node(a.target);
    if (!src_known)
      out.push_back({Violation::Kind::unresolved_endpoint, subject, "source '" + a.source + "' is not declared"});
    if (!dst_known)
      out.push_back({Violation::Kind::unresolved_endpoint, subject, "target '" + a.target + "' is not declared"});
    if (!src_known || !dst_known) continue;

    if (g.find_indicator(a.target))
      out.push_back({Violation::Kind::layer, subject, "indicators cannot be the target of an arc"});
    else if (a.layer == ArcLayer::indicator_to_item && !g.find_indicator(a.source))
      out.push_back({Violation::Kind::layer, subject, "link source must be an indicator"});
    else if (a.layer == ArcLayer::item_to_item && !g.find_item(a.source))
      out.push_back({Violation::Kind::layer, subject, "influence source must be an item"});
  }
  return out;
}

}  // namespace qhealth
