#pragma once
// Absolute and differential evaluation of one inference cycle: night/sleep
// quality rules, value comparison against the previous cycle, and
// propagation of indicator differentials to items.

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "qhealth/core.hpp"
#include "qhealth/facts.hpp"

namespace qhealth {

enum class Provenance : std::uint8_t { observed, inferred, guessed };

inline std::string_view to_string(Provenance p) noexcept {
  switch (p) {
    case Provenance::observed: return "observed";
    case Provenance::inferred: return "inferred";
    case Provenance::guessed: return "guessed";
  }
  return "guessed";
}

inline std::optional<Provenance> provenance_from_string(std::string_view s) noexcept {
  if (s == "observed") return Provenance::observed;
  if (s == "inferred") return Provenance::inferred;
  if (s == "guessed") return Provenance::guessed;
  return std::nullopt;
}

struct DifferentialRecord {
  std::string node;
  Sign sign = Sign::unknown;
  Provenance provenance = Provenance::observed;
  int cycle = 0;
  bool operator==(const DifferentialRecord&) const = default;
};

// Items are either labeled (with a determinate sign) or waiting to be guessed.
struct PartialLabeling {
  std::map<std::string, DifferentialRecord> labeled;
  std::set<std::string> to_guess;

  bool is_labeled(const std::string& item) const { return labeled.count(item) > 0; }
  bool operator==(const PartialLabeling&) const = default;
};

using IndicatorDiffs = std::map<std::string, Sign>;

// plus when severity decreased, minus when it increased.
inline Sign differential(const std::optional<Value>& prev, const std::optional<Value>& curr,
                         const ValueDomain& domain) {
  std::optional<std::int64_t> before, after;
  if (prev) before = severity_of(*prev, domain);
  if (curr) after = severity_of(*curr, domain);
  if (!before || !after) return Sign::unknown;
  if (*after < *before) return Sign::plus;
  if (*after > *before) return Sign::minus;
  return Sign::zero;
}

// Rules (b)-(d) over the effects of all incoming indicator links; nullopt
// means the item stays unlabeled.
inline std::optional<Sign> combine_indicator_effects(std::span<const Sign> effects) {
  if (effects.empty()) return std::nullopt;
  bool plus = false, minus = false, unknown = false;
  for (Sign s : effects) {
    plus |= s == Sign::plus;
    minus |= s == Sign::minus;
    unknown |= s == Sign::unknown;
  }
  if (plus && !minus && !unknown) return Sign::plus;
  if (minus && !plus && !unknown) return Sign::minus;
  if (!plus && !minus && !unknown) return Sign::zero;
  return std::nullopt;
}

// Indicators absent from `indicator_diffs` were not evaluated this cycle and
// contribute no effect; an explicit Sign::unknown contributes `?`.
inline PartialLabeling propagate_indicators(const DependencyGraph& graph, const IndicatorDiffs& indicator_diffs,
                                            const PartialLabeling& existing, int cycle = 0) {
  PartialLabeling out;
  out.labeled = existing.labeled;
  for (const auto& item : graph.items()) {
    if (out.labeled.count(item.name)) continue;
    std::vector<Sign> effects;
    for (const Arc* link : graph.incoming_links(item.name)) {
      auto it = indicator_diffs.find(link->source);
      if (it != indicator_diffs.end()) effects.push_back(arc_effect(it->second, link->kind));
    }
    if (auto s = combine_indicator_effects(effects))
      out.labeled.emplace(item.name, DifferentialRecord{item.name, *s, Provenance::inferred, cycle});
    else
      out.to_guess.insert(item.name);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Sleep quality

struct SleepConfig {
  std::string sleep_item = "sleep";
  std::string early_period = "earlynight";
  std::string middle_period = "middlenight";
  std::string late_period = "latenight";
  std::string bed_object = "bed";
};

struct SleepTrace {
  bool night = false;
  std::optional<std::string> period;
  std::set<std::int64_t> times, in_bed, awake, sleep_interrupt, back_to_bed, bad_sleep, poss_early_awake,
      n_early_awake;
};

struct SleepEvaluation {
  std::vector<Fact> observations;  // obsInd(S,V,0), at most one
  SleepTrace trace;
};

inline bool is_night(int hour) { return hour < 8 || hour > 21; }

inline std::optional<std::string> sleep_period(int hour, const SleepConfig& cfg) {
  if (hour > 21) return cfg.early_period;
  if (hour < 2) return cfg.middle_period;
  if (hour >= 2 && hour < 5) return cfg.late_period;
  return std::nullopt;
}

inline SleepEvaluation evaluate_sleep(const DependencyGraph& graph, const FactBase& facts, int hour,
                                      const SleepConfig& cfg = {}) {
  if (hour < 0 || hour > 23) throw DomainError("hour " + std::to_string(hour) + " outside 0..23");

  std::set<std::string> sleep_indicators;
  for (const Arc* link : graph.incoming_links(cfg.sleep_item)) sleep_indicators.insert(link->source);
  const bool has_sleep_link = !sleep_indicators.empty();

  // obsInd(S,V,1) for some S linked to the sleep item.
  auto prior = [&](std::string_view value, std::optional<std::string_view> only = std::nullopt) {
    for (const Fact* f : facts.with_predicate("obsInd", 3)) {
      if (!f->args[0].is_symbol() || !f->args[2].is_int() || f->args[2].number != 1) continue;
      if (!f->args[1].is_symbol(value)) continue;
      if (only ? f->args[0].name == *only : sleep_indicators.count(f->args[0].name) > 0) return true;
    }
    return false;
  };

  SleepTrace tr;
  tr.night = is_night(hour);
  if (auto p = sleep_period(hour, cfg); p && sleep_indicators.count(*p)) tr.period = p;

  auto time_of = [](const Fact* f, std::size_t pos) -> std::optional<std::int64_t> {
    if (pos < f->args.size() && f->args[pos].is_int()) return f->args[pos].number;
    return std::nullopt;
  };
  std::set<std::int64_t> localized;
  for (const Fact* f : facts.with_predicate("in_bed", 1))
    if (auto t = time_of(f, 0)) tr.in_bed.insert(*t);
  for (const Fact* f : facts.with_predicate("localized", 1))
    if (auto t = time_of(f, 0)) localized.insert(*t);

  if (auto explicit_times = facts.with_predicate("time", 1); !explicit_times.empty()) {
    for (const Fact* f : explicit_times)
      if (auto t = time_of(f, 0)) tr.times.insert(*t);
  } else {
    tr.times.insert(tr.in_bed.begin(), tr.in_bed.end());
    tr.times.insert(localized.begin(), localized.end());
    for (const Fact* f : facts.with_predicate("attribute_obj", 4))
      if (auto t = time_of(f, 3)) tr.times.insert(*t);
    for (const Fact* f : facts.with_predicate("at", 2))
      if (auto t = time_of(f, 1)) tr.times.insert(*t);
  }

  const bool prior_ok = prior("ok");
  const bool prior_mild = prior("mild");
  const bool prior_moderate = prior("moderate");

  for (auto t : tr.times)
    if (tr.night && !tr.in_bed.count(t) && localized.count(t)) tr.awake.insert(t);

  for (auto t : tr.awake) {
    const bool bed_before = !tr.in_bed.empty() && *tr.in_bed.begin() < t;
    if (bed_before || prior_ok || prior_moderate) tr.sleep_interrupt.insert(t);
  }

  for (auto t : tr.in_bed) {
    bool fires = prior_mild && !tr.awake.empty() && *tr.awake.begin() < t;
    if (!fires && has_sleep_link && tr.times.count(t)) {
      for (auto t0 : tr.sleep_interrupt) {
        if (!tr.times.count(t0)) continue;
        for (auto t1 : tr.awake)
          if (t0 < t1 && t1 < t && tr.times.count(t1)) fires = true;
      }
    }
    if (fires) tr.back_to_bed.insert(t);
  }

  for (const Fact* f : facts.with_predicate("attribute_obj", 4)) {
    if (!f->args[0].is_symbol("loadVolatility") || !f->args[1].is_symbol(cfg.bed_object)) continue;
    auto t = time_of(f, 3);
    if (!t || !tr.in_bed.count(*t)) continue;
    if (!f->args[2].is_symbol("stable")) tr.bad_sleep.insert(*t);
  }

  for (auto t : tr.sleep_interrupt) {
    for (auto t1 : tr.times)
      if (t <= t1 && !tr.in_bed.count(t1)) {
        tr.poss_early_awake.insert(t);
        break;
      }
  }
  if (prior_mild && has_sleep_link) tr.poss_early_awake.insert(tr.awake.begin(), tr.awake.end());

  for (auto t : tr.poss_early_awake)
    if (!tr.back_to_bed.empty() && *tr.back_to_bed.rbegin() > t) tr.n_early_awake.insert(t);

  SleepEvaluation out;
  if (!tr.period) {
    out.trace = std::move(tr);
    return out;
  }
  const std::string& s = *tr.period;

  bool consistent = false;
  if (!tr.times.empty())
    for (auto t : tr.poss_early_awake)
      if (!tr.n_early_awake.count(t)) consistent = true;
  const bool moderate = !tr.back_to_bed.empty() && !consistent;
  const bool mild = !tr.bad_sleep.empty() && !moderate && !consistent;
  bool ok = false;
  if (!mild && !moderate && !consistent && prior("ok", s)) {
    for (auto t1 : tr.times) {
      if (tr.sleep_interrupt.count(t1)) continue;
      for (auto t : tr.in_bed)
        if (t != t1) ok = true;
    }
  }

  const char* value = consistent ? "consistent" : moderate ? "moderate" : mild ? "mild" : ok ? "ok" : nullptr;
  if (value) out.observations.push_back(Fact("obsInd", {Term::sym(s), Term::sym(value), Term::integer(0)}));
  out.trace = std::move(tr);
  return out;
}

// ---------------------------------------------------------------------------
// Whole-cycle evaluation

struct EvaluationResult {
  int hour = 0;
  IndicatorDiffs indicator_diffs;
  PartialLabeling labeling;
  std::vector<Fact> derived;
  SleepTrace sleep;
};

namespace detail {

// Latest obsInd/obsItem value of `node` at history index `h`.
inline std::optional<Value> latest_value(const FactBase& facts, std::string_view pred, const std::string& node,
                                         std::int64_t h) {
  std::optional<Value> v;
  for (const Fact* f : facts.at_time(pred, h))
    if (f->args.size() == 3 && f->args[0].is_symbol(node)) v = f->args[1].as_value();
  return v;
}

inline bool mentions(const FactBase& facts, std::string_view pred, const std::string& node) {
  for (const Fact* f : facts.with_predicate(pred))
    if (!f->args.empty() && f->args[0].is_symbol(node)) return true;
  return false;
}

inline std::optional<Sign> explicit_diff(const FactBase& facts, std::string_view pred, const std::string& node) {
  std::optional<Sign> s;
  for (const Fact* f : facts.with_predicate(pred, 2))
    if (f->args[0].is_symbol(node))
      if (auto v = sign_from_term(f->args[1])) s = v;
  return s;
}

}  // namespace detail

inline EvaluationResult evaluate_cycle(const DependencyGraph& graph, const FactBase& facts, int hour,
                                       const SleepConfig& sleep_cfg = {}) {
  EvaluationResult r;
  r.hour = hour;
  auto sleep = evaluate_sleep(graph, facts, hour, sleep_cfg);
  r.sleep = std::move(sleep.trace);
  r.derived = std::move(sleep.observations);

  FactBase all = facts;
  for (const auto& f : r.derived) all.add(f);

  for (const auto& ind : graph.indicators()) {
    if (auto s = detail::explicit_diff(all, "diff_ind", ind.name)) {
      r.indicator_diffs[ind.name] = *s;
      continue;
    }
    if (!detail::mentions(all, "obsInd", ind.name)) continue;
    r.indicator_diffs[ind.name] = differential(detail::latest_value(all, "obsInd", ind.name, 1),
                                               detail::latest_value(all, "obsInd", ind.name, 0), ind.domain);
  }

  PartialLabeling observed;
  for (const auto& item : graph.items()) {
    std::optional<Sign> s = detail::explicit_diff(all, "diff_item", item.name);
    if (!s && detail::mentions(all, "obsItem", item.name))
      s = differential(detail::latest_value(all, "obsItem", item.name, 1),
                       detail::latest_value(all, "obsItem", item.name, 0), item.domain);
    if (s && is_determinate(*s))
      observed.labeled.emplace(item.name, DifferentialRecord{item.name, *s, Provenance::observed, hour});
  }
  r.labeling = propagate_indicators(graph, r.indicator_diffs, observed, hour);
  return r;
}

// diff_ind/2, diff_item/2, diff_item_inferred/2, to_guess/1 plus the sleep
// observations and the cycle clock.
inline FactBase evaluation_facts(const EvaluationResult& r) {
  FactBase out;
  out.add("hour", {Term::integer(r.hour)});
  for (const auto& f : r.derived) out.add(f);
  for (const auto& [ind, s] : r.indicator_diffs) out.add("diff_ind", {Term::sym(ind), sign_term(s)});
  for (const auto& [item, rec] : r.labeling.labeled)
    out.add(rec.provenance == Provenance::observed ? "diff_item" : "diff_item_inferred",
            {Term::sym(item), sign_term(rec.sign)});
  for (const auto& item : r.labeling.to_guess) out.add("to_guess", {Term::sym(item)});
  return out;
}

// Rebuilds the partial labeling from evaluation facts. Graph items that the
// facts do not mention are treated as unlabeled.
inline PartialLabeling labeling_from_facts(const DependencyGraph& graph, const FactBase& facts) {
  PartialLabeling out;
  const int cycle = facts.hour().value_or(0);
  auto read = [&](std::string_view pred, Provenance prov) {
    for (const Fact* f : facts.with_predicate(pred, 2)) {
      if (!f->args[0].is_symbol()) continue;
      auto s = sign_from_term(f->args[1]);
      if (!s || !is_determinate(*s)) continue;
      const auto& name = f->args[0].name;
      out.labeled[name] = DifferentialRecord{name, *s, prov, cycle};
    }
  };
  read("diff_item_inferred", Provenance::inferred);
  read("diff_item", Provenance::observed);
  for (const auto& item : graph.items())
    if (!out.labeled.count(item.name)) out.to_guess.insert(item.name);
  return out;
}

}  // namespace qhealth
