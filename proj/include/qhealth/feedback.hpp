#pragma once
// Feedback policies: a small rule language mapping predictions,
// explanations and observed actions to feedback outputs, one form per
// output per cycle, with prompts, system actions and conflict resolution.
//
//   output keep_active forms {S,N} action none reactions {became_active};
//   trigger keep_active as S when ilab(falls, -1);
//   prefer A over S;
//   on * as AA do prompt at immediate;
//   on observed walk_in_dark do turn_lights_on at immediate;
//   conflict turn_lights_on with dim_lights;

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "qhealth/facts.hpp"

namespace qhealth {

enum class Form : std::uint8_t { suggestion, notification, reminder, alert, alarm };

// Static urgency order, lowest first: S < N < R < A < AA.
inline constexpr std::array<Form, 5> all_forms{Form::suggestion, Form::notification, Form::reminder, Form::alert,
                                               Form::alarm};

inline int urgency(Form f) noexcept { return static_cast<int>(f); }

inline std::string_view to_string(Form f) noexcept {
  switch (f) {
    case Form::suggestion: return "suggestion";
    case Form::notification: return "notification";
    case Form::reminder: return "reminder";
    case Form::alert: return "alert";
    case Form::alarm: return "alarm";
  }
  return "?";
}

inline std::string_view code(Form f) noexcept {
  switch (f) {
    case Form::suggestion: return "S";
    case Form::notification: return "N";
    case Form::reminder: return "R";
    case Form::alert: return "A";
    case Form::alarm: return "AA";
  }
  return "?";
}

inline std::optional<Form> form_from_string(std::string_view s) noexcept {
  for (Form f : all_forms)
    if (s == code(f) || s == to_string(f)) return f;
  return std::nullopt;
}

enum class Channel : std::uint8_t { audio, video };
enum class PromptTime : std::uint8_t { immediate, endOfDay };

inline std::string_view to_string(Channel c) noexcept { return c == Channel::audio ? "audio" : "video"; }
inline std::string_view to_string(PromptTime t) noexcept { return t == PromptTime::immediate ? "immediate" : "endOfDay"; }

inline PromptTime default_prompt_time(Form f) noexcept {
  return f == Form::alarm || f == Form::alert ? PromptTime::immediate : PromptTime::endOfDay;
}

// ---------------------------------------------------------------------------
// Conditions

struct Pattern {
  enum class Kind : std::uint8_t { integer, symbol, variable, anonymous, compound } kind = Kind::symbol;
  std::int64_t number = 0;
  std::string name;
  std::vector<Pattern> args;
};

struct Literal {
  enum class Kind : std::uint8_t { atom, negated, compare } kind = Kind::atom;
  std::string predicate;  // atom / negated
  std::vector<Pattern> args;
  std::string op;  // compare: = != < <= > >=
  Pattern lhs, rhs;
};

struct Condition {
  std::vector<Literal> literals;  // conjunction; empty means true
};

using Bindings = std::map<std::string, Term>;

namespace detail {

inline bool unify(const Pattern& p, const Term& t, Bindings& b) {
  switch (p.kind) {
    case Pattern::Kind::anonymous: return true;
    case Pattern::Kind::integer: return t.is_int() && t.number == p.number;
    case Pattern::Kind::symbol: return t.is_symbol(p.name);
    case Pattern::Kind::variable: {
      auto [it, fresh] = b.emplace(p.name, t);
      return fresh || it->second == t;
    }
    case Pattern::Kind::compound:
      if (t.kind != Term::Kind::compound || t.name != p.name || t.args.size() != p.args.size()) return false;
      for (std::size_t i = 0; i < p.args.size(); ++i)
        if (!unify(p.args[i], t.args[i], b)) return false;
      return true;
  }
  return false;
}

inline std::optional<Term> ground(const Pattern& p, const Bindings& b) {
  switch (p.kind) {
    case Pattern::Kind::integer: return Term::integer(p.number);
    case Pattern::Kind::symbol: return Term::sym(p.name);
    case Pattern::Kind::variable: {
      auto it = b.find(p.name);
      if (it == b.end()) return std::nullopt;
      return it->second;
    }
    case Pattern::Kind::anonymous: return std::nullopt;
    case Pattern::Kind::compound: {
      std::vector<Term> args;
      for (const auto& a : p.args) {
        auto g = ground(a, b);
        if (!g) return std::nullopt;
        args.push_back(std::move(*g));
      }
      return Term::compound(p.name, std::move(args));
    }
  }
  return std::nullopt;
}

inline bool compare(const std::string& op, const Term& l, const Term& r) {
  if (op == "=") return l == r;
  if (op == "!=") return !(l == r);
  if (!l.is_int() || !r.is_int()) return false;
  if (op == "<") return l.number < r.number;
  if (op == "<=") return l.number <= r.number;
  if (op == ">") return l.number > r.number;
  return l.number >= r.number;
}

inline bool holds_from(const std::vector<Literal>& lits, std::size_t k, const FactBase& facts, Bindings& b) {
  if (k == lits.size()) return true;
  const Literal& lit = lits[k];
  switch (lit.kind) {
    case Literal::Kind::compare: {
      auto l = ground(lit.lhs, b), r = ground(lit.rhs, b);
      return l && r && compare(lit.op, *l, *r) && holds_from(lits, k + 1, facts, b);
    }
    case Literal::Kind::negated: {
      for (const Fact* f : facts.with_predicate(lit.predicate, lit.args.size())) {
        Bindings local = b;
        bool match = true;
        for (std::size_t i = 0; i < lit.args.size() && match; ++i) match = unify(lit.args[i], f->args[i], local);
        if (match) return false;
      }
      return holds_from(lits, k + 1, facts, b);
    }
    case Literal::Kind::atom:
      for (const Fact* f : facts.with_predicate(lit.predicate, lit.args.size())) {
        Bindings local = b;
        bool match = true;
        for (std::size_t i = 0; i < lit.args.size() && match; ++i) match = unify(lit.args[i], f->args[i], local);
        if (match && holds_from(lits, k + 1, facts, local)) {
          b = std::move(local);
          return true;
        }
      }
      return false;
  }
  return false;
}

}  // namespace detail

inline bool holds(const Condition& c, const FactBase& facts) {
  Bindings b;
  return detail::holds_from(c.literals, 0, facts, b);
}

// ---------------------------------------------------------------------------
// Policy set

struct OutputDecl {
  std::string name;
  std::set<Form> forms;
  std::string action;
  Channel channel = Channel::audio;
  std::set<std::string> reactions;  // observed actions counted as reactions
};

struct RuleRef {
  std::string id;  // kind and line, e.g. "trigger@12"
  std::size_t line = 0;
};

struct TriggerRule {
  RuleRef ref;
  std::string output;
  Form form;
  Condition guard;
};

struct PreferRule {
  RuleRef ref;
  Form higher, lower;
  std::optional<std::string> output;
  std::optional<Condition> unless;
};

struct EcaRule {
  enum class Event : std::uint8_t { selection, observed } event = Event::selection;
  enum class Act : std::uint8_t { prompt, system, named } act = Act::prompt;
  RuleRef ref;
  std::string subject;        // output name or "*" (selection); observed action name
  std::optional<Form> form;   // nullopt matches any form
  Condition guard;
  std::string action;         // for Act::named
  PromptTime at = PromptTime::endOfDay;
};

struct ConflictRule {
  RuleRef ref;
  std::string a, b;
};

struct PolicySet {
  std::map<std::string, OutputDecl> outputs;
  std::vector<TriggerRule> triggers;
  std::vector<PreferRule> prefers;
  std::vector<EcaRule> ecas;
  std::vector<ConflictRule> conflicts;

  bool empty() const {
    return outputs.empty() && triggers.empty() && prefers.empty() && ecas.empty() && conflicts.empty();
  }
};

class PolicyError : public std::runtime_error {
 public:
  PolicyError(std::size_t line, std::size_t column, const std::string& msg)
      : std::runtime_error(std::to_string(line) + ":" + std::to_string(column) + ": " + msg), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Raised by a cycle step, e.g. for a guard over an unknown predicate.
class PolicyStepError : public std::runtime_error {
 public:
  PolicyStepError(std::string rule, const std::string& msg)
      : std::runtime_error("rule " + rule + ": " + msg), rule_(std::move(rule)) {}
  const std::string& rule() const noexcept { return rule_; }

 private:
  std::string rule_;
};

namespace detail {

struct PolicyToken {
  enum class Kind : std::uint8_t { ident, integer, punct, end } kind = Kind::end;
  std::string text;
  std::int64_t number = 0;
  std::size_t line = 1, column = 1;
};

class PolicyLexer {
 public:
  explicit PolicyLexer(std::string_view src) : src_(src) {}

  std::vector<PolicyToken> run() {
    std::vector<PolicyToken> out;
    while (true) {
      skip();
      PolicyToken t;
      t.line = line_;
      t.column = col_;
      if (pos_ >= src_.size()) {
        out.push_back(t);
        return out;
      }
      char c = src_[pos_];
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        t.kind = PolicyToken::Kind::ident;
        while (pos_ < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
          t.text += take();
      } else if (std::isdigit(static_cast<unsigned char>(c)) ||
                 (c == '-' && pos_ + 1 < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_ + 1])))) {
        t.kind = PolicyToken::Kind::integer;
        t.text += take();
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) t.text += take();
        try {
          t.number = std::stoll(t.text);
        } catch (const std::out_of_range&) {
          throw PolicyError(t.line, t.column, "integer out of range");
        }
      } else {
        t.kind = PolicyToken::Kind::punct;
        static const std::array<std::string_view, 4> two{"!=", "<=", ">=", "=="};
        std::string_view rest = src_.substr(pos_);
        bool matched = false;
        for (auto op : two) {
          if (rest.starts_with(op)) {
            t.text = op == "==" ? "=" : std::string(op);
            take();
            take();
            matched = true;
            break;
          }
        }
        if (!matched) {
          if (std::string_view("{}(),;*=<>").find(c) == std::string_view::npos)
            throw PolicyError(line_, col_, std::string("unexpected character '") + c + "'");
          t.text = std::string(1, take());
        }
      }
      out.push_back(std::move(t));
    }
  }

 private:
  char take() {
    char c = src_[pos_++];
    if (c == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    return c;
  }
  void skip() {
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (c == '%') {
        while (pos_ < src_.size() && src_[pos_] != '\n') take();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        take();
      } else {
        break;
      }
    }
  }

  std::string_view src_;
  std::size_t pos_ = 0, line_ = 1, col_ = 1;
};

class PolicyParser {
 public:
  explicit PolicyParser(std::string_view src) : toks_(PolicyLexer(src).run()) {}

  PolicySet run() {
    while (!at_end()) statement();
    check();
    return std::move(p_);
  }

 private:
  const PolicyToken& peek() const { return toks_[i_]; }
  bool at_end() const { return peek().kind == PolicyToken::Kind::end; }
  [[noreturn]] void fail(const std::string& msg) const { throw PolicyError(peek().line, peek().column, msg); }
  [[noreturn]] void fail_at(const PolicyToken& t, const std::string& msg) const {
    throw PolicyError(t.line, t.column, msg);
  }

  bool is(std::string_view text) const {
    return (peek().kind == PolicyToken::Kind::punct || peek().kind == PolicyToken::Kind::ident) && peek().text == text;
  }
  bool accept(std::string_view text) {
    if (!is(text)) return false;
    ++i_;
    return true;
  }
  void expect(std::string_view text) {
    if (!accept(text)) fail("expected '" + std::string(text) + "'");
  }
  std::string ident(const char* what) {
    if (peek().kind != PolicyToken::Kind::ident) fail(std::string("expected ") + what);
    return toks_[i_++].text;
  }
  Form form() {
    const auto& t = peek();
    if (t.kind != PolicyToken::Kind::ident) fail("expected a feedback form");
    auto f = form_from_string(t.text);
    if (!f) fail("unknown feedback form '" + t.text + "'");
    ++i_;
    return *f;
  }
  RuleRef ref(const char* kind, const PolicyToken& at) {
    return {std::string(kind) + "@" + std::to_string(at.line), at.line};
  }

  void statement() {
    const PolicyToken start = peek();
    std::string kw = ident("a statement keyword");
    if (kw == "output") {
      output(start);
    } else if (kw == "trigger") {
      TriggerRule r{ref("trigger", start), ident("an output name"), Form::suggestion, {}};
      expect("as");
      const PolicyToken ft = peek();
      r.form = form();
      expect("when");
      r.guard = condition();
      triggers_at_.push_back(ft);
      p_.triggers.push_back(std::move(r));
    } else if (kw == "prefer") {
      PreferRule r{ref("prefer", start), form(), Form::suggestion, std::nullopt, std::nullopt};
      expect("over");
      r.lower = form();
      if (accept("for")) r.output = ident("an output name");
      if (accept("unless")) r.unless = condition();
      if (r.higher == r.lower) fail_at(start, "a form cannot be preferred over itself");
      prefers_at_.push_back(start);
      p_.prefers.push_back(std::move(r));
    } else if (kw == "on") {
      eca(start);
    } else if (kw == "conflict") {
      ConflictRule r{ref("conflict", start), ident("an action"), {}};
      expect("with");
      r.b = ident("an action");
      p_.conflicts.push_back(std::move(r));
    } else {
      fail_at(start, "unknown statement '" + kw + "'");
    }
    expect(";");
  }

  void output(const PolicyToken& start) {
    OutputDecl d;
    d.name = ident("an output name");
    expect("forms");
    expect("{");
    do d.forms.insert(form());
    while (accept(","));
    expect("}");
    expect("action");
    d.action = ident("an action name");
    if (accept("channel")) {
      std::string c = ident("a channel");
      if (c == "audio")
        d.channel = Channel::audio;
      else if (c == "video")
        d.channel = Channel::video;
      else
        fail("channel must be audio or video");
    }
    if (accept("reactions")) {
      expect("{");
      do d.reactions.insert(ident("an action name"));
      while (accept(","));
      expect("}");
    }
    if (p_.outputs.count(d.name)) fail_at(start, "output '" + d.name + "' declared twice");
    p_.outputs.emplace(d.name, std::move(d));
  }

  void eca(const PolicyToken& start) {
    EcaRule r;
    r.ref = ref("on", start);
    if (accept("observed")) {
      r.event = EcaRule::Event::observed;
      r.subject = ident("an action name");
    } else {
      r.subject = accept("*") ? "*" : ident("an output name or '*'");
      if (accept("as")) {
        if (!accept("*")) r.form = form();
      }
      if (r.subject != "*") ecas_at_.emplace_back(start, r.subject);
    }
    if (accept("if")) r.guard = condition();
    expect("do");
    std::string what = ident("prompt, system or an action name");
    if (what == "prompt")
      r.act = EcaRule::Act::prompt;
    else if (what == "system")
      r.act = EcaRule::Act::system;
    else {
      r.act = EcaRule::Act::named;
      r.action = what;
    }
    if (r.event == EcaRule::Event::observed && r.act != EcaRule::Act::named)
      fail_at(start, "observed-action rules must name the action to perform");
    expect("at");
    std::string when = ident("immediate or endOfDay");
    if (when == "immediate")
      r.at = PromptTime::immediate;
    else if (when == "endOfDay")
      r.at = PromptTime::endOfDay;
    else
      fail("expected immediate or endOfDay");
    p_.ecas.push_back(std::move(r));
  }

  Condition condition() {
    Condition c;
    if (accept("true")) return c;
    do c.literals.push_back(literal());
    while (accept(","));
    return c;
  }

  Literal literal() {
    Literal l;
    if (accept("not")) {
      l.kind = Literal::Kind::negated;
      atom(l);
      return l;
    }
    std::size_t mark = i_;
    Pattern lhs = pattern();
    static const std::set<std::string> ops{"=", "!=", "<", "<=", ">", ">="};
    if (peek().kind == PolicyToken::Kind::punct && ops.count(peek().text)) {
      l.kind = Literal::Kind::compare;
      l.op = toks_[i_++].text;
      l.lhs = std::move(lhs);
      l.rhs = pattern();
      return l;
    }
    i_ = mark;
    l.kind = Literal::Kind::atom;
    atom(l);
    return l;
  }

  void atom(Literal& l) {
    const auto& t = peek();
    if (t.kind != PolicyToken::Kind::ident || !std::islower(static_cast<unsigned char>(t.text[0])))
      fail("expected a predicate");
    l.predicate = toks_[i_++].text;
    if (accept("(")) {
      do l.args.push_back(pattern());
      while (accept(","));
      expect(")");
    }
  }

  Pattern pattern() {
    const auto& t = peek();
    Pattern p;
    if (t.kind == PolicyToken::Kind::integer) {
      p.kind = Pattern::Kind::integer;
      p.number = t.number;
      ++i_;
      return p;
    }
    if (t.kind != PolicyToken::Kind::ident) fail("expected a term");
    p.name = toks_[i_++].text;
    if (p.name == "_") {
      p.kind = Pattern::Kind::anonymous;
    } else if (std::isupper(static_cast<unsigned char>(p.name[0])) || p.name[0] == '_') {
      p.kind = Pattern::Kind::variable;
    } else if (accept("(")) {
      p.kind = Pattern::Kind::compound;
      do p.args.push_back(pattern());
      while (accept(","));
      expect(")");
    } else {
      p.kind = Pattern::Kind::symbol;
    }
    return p;
  }

  // Cross-statement checks once every output is declared.
  void check() {
    for (std::size_t k = 0; k < p_.triggers.size(); ++k) {
      const auto& r = p_.triggers[k];
      auto it = p_.outputs.find(r.output);
      if (it == p_.outputs.end()) fail_at(triggers_at_[k], "trigger for undeclared output '" + r.output + "'");
      if (!it->second.forms.count(r.form))
        fail_at(triggers_at_[k], "form " + std::string(code(r.form)) + " is not possible for '" + r.output + "'");
    }
    for (const auto& [at, name] : ecas_at_)
      if (!p_.outputs.count(name)) fail_at(at, "rule for undeclared output '" + name + "'");
    for (std::size_t k = 0; k < p_.prefers.size(); ++k)
      if (p_.prefers[k].output && !p_.outputs.count(*p_.prefers[k].output))
        fail_at(prefers_at_[k], "preference for undeclared output '" + *p_.prefers[k].output + "'");

    // Unconditional preferences must not contradict each other.
    std::vector<std::optional<std::string>> scopes{std::nullopt};
    for (const auto& [name, d] : p_.outputs) scopes.push_back(name);
    for (const auto& scope : scopes) {
      std::array<std::array<bool, 5>, 5> reach{};
      std::optional<std::size_t> first;
      for (std::size_t k = 0; k < p_.prefers.size(); ++k) {
        const auto& r = p_.prefers[k];
        if (r.unless || (r.output && r.output != scope)) continue;
        reach[urgency(r.higher)][urgency(r.lower)] = true;
        if (!first) first = k;
      }
      for (int m = 0; m < 5; ++m)
        for (int a = 0; a < 5; ++a)
          for (int b = 0; b < 5; ++b)
            if (reach[a][m] && reach[m][b]) reach[a][b] = true;
      for (int a = 0; a < 5; ++a)
        if (reach[a][a])
          fail_at(prefers_at_[*first], "unconditional preferences form a cycle through " +
                                           std::string(code(all_forms[a])));
    }
  }

  std::vector<PolicyToken> toks_;
  std::size_t i_ = 0;
  PolicySet p_;
  std::vector<PolicyToken> triggers_at_, prefers_at_;
  std::vector<std::pair<PolicyToken, std::string>> ecas_at_;
};

}  // namespace detail

inline PolicySet parse_policy(std::string_view text) { return detail::PolicyParser(text).run(); }

// ---------------------------------------------------------------------------
// Cycle step

struct ChosenForm {
  std::string output;
  Form form;
  std::set<Form> candidates;
  bool operator==(const ChosenForm&) const = default;
};

struct ActionEntry {
  std::string subject;  // output name, or the observed action
  std::string form;     // form name, or "observed"
  std::string action;
  PromptTime time = PromptTime::endOfDay;
  int urgency = 0;
  bool operator==(const ActionEntry&) const = default;
};

struct Prompt {
  std::string output;
  Form form;
  Channel channel = Channel::audio;
  PromptTime time = PromptTime::endOfDay;
  bool operator==(const Prompt&) const = default;
};

struct Decision {
  std::vector<ChosenForm> forms;  // by output name
  std::vector<ActionEntry> actions;
  std::vector<Prompt> prompts;
  std::vector<std::pair<std::string, std::string>> suppressed;  // (kept, dropped)
  bool operator==(const Decision&) const = default;

  const ChosenForm* chosen(const std::string& output) const {
    for (const auto& c : forms)
      if (c.output == output) return &c;
    return nullptr;
  }
};

struct ReactionEntry {
  std::string output;
  Form form;
  std::string action;
  std::int64_t time = 0;
  bool operator==(const ReactionEntry&) const = default;
};

// Returns true when `a` should be kept over `b`.
using ActionComparator = std::function<bool(const ActionEntry& a, const ActionEntry& b)>;

inline bool prefer_urgent(const ActionEntry& a, const ActionEntry& b) {
  if (a.urgency != b.urgency) return a.urgency > b.urgency;
  if (a.time != b.time) return a.time == PromptTime::immediate;
  return a.action < b.action;
}

// Total order of the five forms for one output, most preferred first:
// active preferences, completed by the static urgency order.
inline std::vector<Form> effective_order(const PolicySet& p, const std::string& output, const FactBase& facts) {
  std::array<std::array<bool, 5>, 5> edge{};
  for (const auto& r : p.prefers) {
    if (r.output && *r.output != output) continue;
    if (r.unless && holds(*r.unless, facts)) continue;
    edge[urgency(r.higher)][urgency(r.lower)] = true;
  }
  std::vector<Form> order;
  std::array<bool, 5> placed{};
  for (int step = 0; step < 5; ++step) {
    std::optional<int> pick;
    for (int f = 4; f >= 0 && !pick; --f) {
      if (placed[f]) continue;
      bool free = true;
      for (int g = 0; g < 5; ++g)
        if (!placed[g] && edge[g][f]) free = false;
      if (free) pick = f;
    }
    // Conditional preferences can still close a cycle; fall back to urgency.
    if (!pick)
      for (int f = 4; f >= 0 && !pick; --f)
        if (!placed[f]) pick = f;
    placed[*pick] = true;
    order.push_back(all_forms[*pick]);
  }
  return order;
}

inline std::vector<ReactionEntry> log_reaction(const PolicySet& p, const Decision& decision,
                                               const FactBase& observed) {
  std::vector<ReactionEntry> out;
  for (const Fact* f : observed.with_predicate("action_observed", 2)) {
    if (!f->args[0].is_symbol() || !f->args[1].is_int()) continue;
    for (const auto& c : decision.forms) {
      auto it = p.outputs.find(c.output);
      if (it != p.outputs.end() && it->second.reactions.count(f->args[0].name))
        out.push_back({c.output, c.form, f->args[0].name, f->args[1].number});
    }
  }
  return out;
}

inline void check_guards(const PolicySet& p) {
  const auto& known = known_predicates();
  auto scan = [&](const Condition& c, const RuleRef& r) {
    for (const auto& l : c.literals)
      if (l.kind != Literal::Kind::compare && !known.count(l.predicate))
        throw PolicyStepError(r.id, "guard uses unknown predicate " + l.predicate + "/" +
                                        std::to_string(l.args.size()));
  };
  for (const auto& r : p.triggers) scan(r.guard, r.ref);
  for (const auto& r : p.prefers)
    if (r.unless) scan(*r.unless, r.ref);
  for (const auto& r : p.ecas) scan(r.guard, r.ref);
}

// One cycle: triggers, choice, ECA rules, conflict resolution. `facts`
// holds everything visible to guards (cycle facts, ilab, expl_arc,
// action_observed, reaction).
inline Decision step(const PolicySet& p, const FactBase& facts, const ActionComparator& better = prefer_urgent) {
  check_guards(p);
  Decision d;

  std::map<std::string, std::set<Form>> candidates;
  for (const auto& r : p.triggers)
    if (holds(r.guard, facts)) candidates[r.output].insert(r.form);

  for (const auto& [output, forms] : candidates) {
    for (Form f : effective_order(p, output, facts)) {
      if (forms.count(f)) {
        d.forms.push_back({output, f, forms});
        break;
      }
    }
  }

  for (const auto& c : d.forms) {
    const OutputDecl& decl = p.outputs.at(c.output);
    Prompt prompt{c.output, c.form, decl.channel, default_prompt_time(c.form)};
    for (const auto& r : p.ecas) {
      if (r.event != EcaRule::Event::selection) continue;
      if (r.subject != "*" && r.subject != c.output) continue;
      if (r.form && *r.form != c.form) continue;
      if (!holds(r.guard, facts)) continue;
      if (r.act == EcaRule::Act::prompt) {
        prompt.time = r.at;
      } else {
        std::string action = r.act == EcaRule::Act::system ? decl.action : r.action;
        d.actions.push_back({c.output, std::string(to_string(c.form)), action, r.at, urgency(c.form)});
      }
    }
    d.prompts.push_back(prompt);
  }

  for (const Fact* f : facts.with_predicate("action_observed", 2)) {
    if (!f->args[0].is_symbol()) continue;
    for (const auto& r : p.ecas) {
      if (r.event != EcaRule::Event::observed || r.subject != f->args[0].name) continue;
      if (!holds(r.guard, facts)) continue;
      ActionEntry e{r.subject, "observed", r.action, r.at, r.at == PromptTime::immediate ? urgency(Form::alarm) : 0};
      if (std::find(d.actions.begin(), d.actions.end(), e) == d.actions.end()) d.actions.push_back(e);
    }
  }

  for (const auto& r : p.conflicts) {
    auto find = [&](const std::string& name) {
      const ActionEntry* best = nullptr;
      for (const auto& e : d.actions)
        if (e.action == name && (!best || better(e, *best))) best = &e;
      return best;
    };
    const ActionEntry* a = find(r.a);
    const ActionEntry* b = find(r.b);
    if (!a || !b) continue;
    const std::string keep = better(*a, *b) ? r.a : r.b;
    const std::string drop = keep == r.a ? r.b : r.a;
    std::erase_if(d.actions, [&](const ActionEntry& e) { return e.action == drop; });
    d.suppressed.emplace_back(keep, drop);
  }
  return d;
}

inline FactBase decision_facts(const Decision& d) {
  FactBase out;
  for (const auto& c : d.forms)
    out.add("feedback_form", {Term::sym(c.output), Term::sym(std::string(to_string(c.form)))});
  for (const auto& a : d.actions) {
    out.add("do_action", {Term::sym(a.subject), Term::sym(a.form), Term::sym(a.action)});
    out.add("schedule", {Term::sym(a.action), Term::sym(std::string(to_string(a.time)))});
  }
  for (const auto& pr : d.prompts)
    out.add("do_prompt", {Term::sym(pr.output), Term::sym(std::string(to_string(pr.form))),
                          Term::sym(std::string(to_string(pr.channel))), Term::sym(std::string(to_string(pr.time)))});
  return out;
}

inline FactBase reaction_facts(std::span<const ReactionEntry> log) {
  FactBase out;
  for (const auto& r : log)
    out.add("reaction", {Term::sym(r.output), Term::sym(std::string(to_string(r.form))), Term::sym(r.action),
                         Term::integer(r.time)});
  return out;
}

}  // namespace qhealth
