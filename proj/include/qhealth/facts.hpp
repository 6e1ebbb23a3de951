#pragma once
// Ground facts in ASP syntax (`pred(arg,...).`), the indexed FactBase and
// the line-oriented parser/emitter.

#include <charconv>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "qhealth/core.hpp"

namespace qhealth {

struct Term {
  enum class Kind : std::uint8_t { integer, symbol, compound };

  Kind kind = Kind::symbol;
  std::int64_t number = 0;
  std::string name;
  std::vector<Term> args;

  static Term integer(std::int64_t v) {
    Term t;
    t.kind = Kind::integer;
    t.number = v;
    return t;
  }
  static Term sym(std::string s) {
    Term t;
    t.kind = Kind::symbol;
    t.name = std::move(s);
    return t;
  }
  static Term compound(std::string functor, std::vector<Term> args) {
    Term t;
    t.kind = Kind::compound;
    t.name = std::move(functor);
    t.args = std::move(args);
    return t;
  }

  bool is_int() const noexcept { return kind == Kind::integer; }
  bool is_symbol() const noexcept { return kind == Kind::symbol; }
  bool is_symbol(std::string_view s) const noexcept { return kind == Kind::symbol && name == s; }

  std::optional<Value> as_value() const {
    if (kind == Kind::integer) return Value{number};
    if (kind == Kind::symbol) return Value{name};
    return std::nullopt;
  }

  bool operator==(const Term& o) const {
    if (kind != o.kind) return false;
    switch (kind) {
      case Kind::integer: return number == o.number;
      case Kind::symbol: return name == o.name;
      case Kind::compound: return name == o.name && args == o.args;
    }
    return false;
  }
};

inline void write_term(std::string& out, const Term& t) {
  switch (t.kind) {
    case Term::Kind::integer: out += std::to_string(t.number); break;
    case Term::Kind::symbol: out += t.name; break;
    case Term::Kind::compound:
      out += t.name;
      out += '(';
      for (std::size_t i = 0; i < t.args.size(); ++i) {
        if (i) out += ',';
        write_term(out, t.args[i]);
      }
      out += ')';
      break;
  }
}

inline std::string to_string(const Term& t) {
  std::string s;
  write_term(s, t);
  return s;
}

inline Term sign_term(Sign s) {
  return s == Sign::unknown ? Term::sym("unknown") : Term::integer(static_cast<std::int64_t>(s));
}

inline std::optional<Sign> sign_from_term(const Term& t) {
  if (t.is_int()) return sign_from_int(t.number);
  if (t.is_symbol("unknown")) return Sign::unknown;
  return std::nullopt;
}

struct Fact {
  std::string predicate;
  std::vector<Term> args;

  Fact() = default;
  Fact(std::string pred, std::vector<Term> a) : predicate(std::move(pred)), args(std::move(a)) {}

  std::size_t arity() const noexcept { return args.size(); }
  std::string signature() const { return predicate + "/" + std::to_string(args.size()); }

  bool operator==(const Fact&) const = default;
};

inline std::string to_string(const Fact& f) {
  std::string s = f.predicate;
  if (!f.args.empty()) {
    s += '(';
    for (std::size_t i = 0; i < f.args.size(); ++i) {
      if (i) s += ',';
      write_term(s, f.args[i]);
    }
    s += ')';
  }
  s += '.';
  return s;
}

// Position of the time argument per predicate signature.
inline const std::map<std::string, std::size_t>& default_time_positions() {
  static const std::map<std::string, std::size_t> positions{
      {"obsInd/3", 2},        {"obsItem/3", 2},   {"in/4", 2},          {"sense/4", 3},
      {"attribute_obj/4", 3}, {"attribute/4", 3}, {"action_observed/2", 1}, {"at/2", 1},
      {"localized/1", 0},     {"in_bed/1", 0},    {"time/1", 0},        {"personIn/3", 2},
      {"personOut/3", 2},     {"reaction/4", 3}};
  return positions;
}

// Predicates understood somewhere in the pipeline. Others are accepted with
// a warning so newer fact files still load.
inline const std::set<std::string>& known_predicates() {
  static const std::set<std::string> names{
      "hour",      "time",        "obsInd",      "obsItem",    "diff_ind",  "diff_item",
      "diff_item_inferred",       "to_guess",    "in",         "sense",     "attribute_obj",
      "attribute", "action_observed", "at",      "localized",  "in_bed",    "personIn",
      "personOut", "near",        "far",         "ilab",       "count_infl", "sol_label",
      "expl_arc",  "feedback_form", "do_action", "do_prompt",  "schedule",  "reaction",
      "indicator", "item",        "link",        "influence",  "cell",      "wall",
      "passage",   "data_ex",     "scale",       "domain",     "numeric",   "person",
      "room",      "area",        "object",      "possible_form"};
  return names;
}

class FactBase {
 public:
  FactBase() = default;

  void add(Fact f) {
    const std::size_t idx = facts_.size();
    by_predicate_[f.predicate].push_back(idx);
    auto tp = default_time_positions().find(f.signature());
    if (tp != default_time_positions().end() && tp->second < f.args.size() && f.args[tp->second].is_int())
      by_time_[{f.predicate, f.args[tp->second].number}].push_back(idx);
    facts_.push_back(std::move(f));
  }

  void add(std::string predicate, std::vector<Term> args) { add(Fact(std::move(predicate), std::move(args))); }

  void append(const FactBase& other) {
    for (const auto& f : other.facts()) add(f);
  }

  const std::vector<Fact>& facts() const noexcept { return facts_; }
  std::size_t size() const noexcept { return facts_.size(); }
  bool empty() const noexcept { return facts_.empty(); }

  // All facts of a predicate (optionally of a given arity) in insertion order.
  std::vector<const Fact*> with_predicate(std::string_view pred, std::optional<std::size_t> arity = std::nullopt) const {
    std::vector<const Fact*> out;
    auto it = by_predicate_.find(std::string(pred));
    if (it == by_predicate_.end()) return out;
    for (std::size_t i : it->second)
      if (!arity || facts_[i].args.size() == *arity) out.push_back(&facts_[i]);
    return out;
  }

  // Facts of `pred` whose declared time argument equals `t`.
  std::vector<const Fact*> at_time(std::string_view pred, std::int64_t t) const {
    std::vector<const Fact*> out;
    auto it = by_time_.find({std::string(pred), t});
    if (it == by_time_.end()) return out;
    for (std::size_t i : it->second) out.push_back(&facts_[i]);
    return out;
  }

  bool contains(const Fact& f) const {
    for (const Fact* g : with_predicate(f.predicate, f.args.size()))
      if (*g == f) return true;
    return false;
  }

  // Cycle clock from the `hour(N)` fact, if present.
  std::optional<int> hour() const {
    for (const Fact* f : with_predicate("hour", 1))
      if (f->args[0].is_int()) return static_cast<int>(f->args[0].number);
    return std::nullopt;
  }

  bool operator==(const FactBase& o) const { return facts_ == o.facts_; }

 private:
  std::vector<Fact> facts_;
  std::unordered_map<std::string, std::vector<std::size_t>> by_predicate_;
  std::map<std::pair<std::string, std::int64_t>, std::vector<std::size_t>> by_time_;
};

// ---------------------------------------------------------------------------
// Parsing

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, std::size_t column, const std::string& msg)
      : std::runtime_error(std::to_string(line) + ":" + std::to_string(column) + ": " + msg),
        line_(line),
        column_(column) {}
  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

struct Diagnostic {
  std::size_t line = 0;
  std::size_t column = 0;
  std::string message;
};

namespace detail {

class FactReader {
 public:
  explicit FactReader(std::string_view text) : text_(text) {}

  template <typename Sink>
  void run(Sink&& sink) {
    for (;;) {
      skip_space();
      if (at_end()) return;
      const std::size_t line = line_, col = col_;
      Fact f = statement();
      sink(std::move(f), line, col);
    }
  }

 private:
  static constexpr int max_depth = 64;

  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t col_ = 1;

  bool at_end() const { return pos_ >= text_.size(); }
  char peek() const { return at_end() ? '\0' : text_[pos_]; }

  void advance() {
    if (text_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(line_, col_, msg); }

  void skip_space() {
    while (!at_end()) {
      char c = peek();
      if (c == '%') {
        while (!at_end() && peek() != '\n') advance();
      } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        advance();
      } else {
        break;
      }
    }
  }

  static bool ident_start(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }
  static bool ident_char(char c) { return ident_start(c) || (c >= '0' && c <= '9') || c == '_'; }
  static bool digit(char c) { return c >= '0' && c <= '9'; }

  std::string identifier() {
    if (!ident_start(peek())) fail(describe_unexpected("identifier"));
    const std::size_t start = pos_;
    while (!at_end() && ident_char(peek())) advance();
    return std::string(text_.substr(start, pos_ - start));
  }

  std::string describe_unexpected(const char* wanted) const {
    if (at_end()) return std::string("expected ") + wanted + ", found end of input";
    const auto c = static_cast<unsigned char>(peek());
    if (c < 0x20 || c >= 0x7f) return std::string("expected ") + wanted + ", found byte " + std::to_string(c);
    return std::string("expected ") + wanted + ", found '" + static_cast<char>(c) + "'";
  }

  void expect(char c, const char* what) {
    skip_space();
    if (peek() != c) fail(describe_unexpected(what));
    advance();
  }

  std::vector<Term> arguments(int depth) {
    std::vector<Term> args;
    expect('(', "'('");
    for (;;) {
      skip_space();
      args.push_back(term(depth + 1));
      skip_space();
      if (peek() == ',') {
        advance();
        continue;
      }
      if (peek() == ')') {
        advance();
        return args;
      }
      fail(describe_unexpected("',' or ')'"));
    }
  }

  Term term(int depth) {
    if (depth > max_depth) fail("terms nested too deeply");
    skip_space();
    const char c = peek();
    if (c == '-' || digit(c)) {
      const std::size_t start = pos_;
      if (c == '-') advance();
      if (!digit(peek())) fail(describe_unexpected("digit"));
      while (!at_end() && digit(peek())) advance();
      std::int64_t v = 0;
      const char* first = text_.data() + start;
      const char* last = text_.data() + pos_;
      auto [ptr, ec] = std::from_chars(first, last, v);
      if (ec != std::errc() || ptr != last) fail("integer out of range");
      return Term::integer(v);
    }
    std::string name = identifier();
    skip_space();
    if (peek() == '(') return Term::compound(std::move(name), arguments(depth));
    return Term::sym(std::move(name));
  }

  Fact statement() {
    Fact f;
    f.predicate = identifier();
    skip_space();
    if (peek() == '(') f.args = arguments(0);
    expect('.', "'.' ending the statement");
    return f;
  }
};

}  // namespace detail

// Parses a fact stream. Throws ParseError on malformed input; unknown
// predicates are accepted and reported through `warnings` when given.
inline FactBase parse_facts(std::string_view text, std::vector<Diagnostic>* warnings = nullptr) {
  FactBase base;
  detail::FactReader reader(text);
  reader.run([&](Fact f, std::size_t line, std::size_t col) {
    if (warnings && !known_predicates().count(f.predicate))
      warnings->push_back({line, col, "unknown predicate '" + f.signature() + "'"});
    base.add(std::move(f));
  });
  return base;
}

// Raw statements with their positions, used by loaders that need to report
// semantic errors at the statement's location.
struct PositionedFact {
  Fact fact;
  std::size_t line = 0;
  std::size_t column = 0;
};

inline std::vector<PositionedFact> parse_statements(std::string_view text) {
  std::vector<PositionedFact> out;
  detail::FactReader reader(text);
  reader.run([&](Fact f, std::size_t line, std::size_t col) { out.push_back({std::move(f), line, col}); });
  return out;
}

inline std::string emit_facts(const FactBase& base) {
  std::string out;
  for (const auto& f : base.facts()) {
    out += to_string(f);
    out += '\n';
  }
  return out;
}

}  // namespace qhealth
