#pragma once
// Cell-level tracking of the person from proximity readings in(X,Y,T,P)
// and auxiliary sensor facts sense(S,X,Y,T). Each timestep picks one cell
// through a cascade of criteria:
//   1. best movement and best coherence
//   2. best movement
//   3. best coherence
//   4. any valid candidate
// then maximizes signal strength (or the number of sensor types when no
// proximity reading exists) and breaks ties on (X,Y).

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "qhealth/context.hpp"
#include "qhealth/facts.hpp"

namespace qhealth {

struct TimestepInput {
  std::int64_t time = 0;
  std::map<CellPos, std::int64_t> rssi;                // strongest reading per cell
  std::map<CellPos, std::set<std::string>> sensed;     // sensor types per cell
  bool operator==(const TimestepInput&) const = default;
};

struct Selection {
  CellPos cell;
  std::int64_t time = 0;
  int criterion = 4;
  std::vector<CellPos> co_optimal;                    // every cell tied at the final step
  std::map<CellPos, int> coherence;                   // per valid candidate
  std::map<CellPos, std::int64_t> distance;           // to the previous position
  bool operator==(const Selection&) const = default;
};

struct Track {
  std::vector<Selection> steps;
  std::vector<std::int64_t> skipped;  // timesteps without a valid candidate
};

struct LocalizationConfig {
  std::optional<std::int64_t> first, last;  // horizon; defaults to the span of the data
};

inline std::map<std::int64_t, TimestepInput> gather_inputs(const FactBase& facts) {
  std::map<std::int64_t, TimestepInput> out;
  for (const Fact* f : facts.with_predicate("in", 4)) {
    const auto& a = f->args;
    if (!a[0].is_int() || !a[1].is_int() || !a[2].is_int() || !a[3].is_int()) continue;
    auto& in = out[a[2].number];
    in.time = a[2].number;
    CellPos p{a[0].number, a[1].number};
    auto [it, fresh] = in.rssi.emplace(p, a[3].number);
    if (!fresh) it->second = std::max(it->second, a[3].number);
  }
  for (const Fact* f : facts.with_predicate("sense", 4)) {
    const auto& a = f->args;
    if (!a[0].is_symbol() || !a[1].is_int() || !a[2].is_int() || !a[3].is_int()) continue;
    auto& in = out[a[3].number];
    in.time = a[3].number;
    in.sensed[{a[1].number, a[2].number}].insert(a[0].name);
  }
  return out;
}

// floor(100*C/N) over the sensor types expected at the cell; 100 when none
// are expected.
inline int coherence(CellPos cell, const TimestepInput& in, const Grid& grid) {
  const auto& expected = grid.expected_at(cell);
  if (expected.empty()) return 100;
  std::size_t c = 0;
  if (auto it = in.sensed.find(cell); it != in.sensed.end())
    for (const auto& s : expected) c += it->second.count(s);
  return static_cast<int>(100 * c / expected.size());
}

inline std::int64_t manhattan(CellPos a, CellPos b) {
  return (a.x > b.x ? a.x - b.x : b.x - a.x) + (a.y > b.y ? a.y - b.y : b.y - a.y);
}

// Candidates at the smallest positive distance from `prev`.
inline std::set<CellPos> best_movement(const std::set<CellPos>& candidates, CellPos prev) {
  std::optional<std::int64_t> best;
  for (auto c : candidates)
    if (auto d = manhattan(c, prev); d > 0 && (!best || d < *best)) best = d;
  std::set<CellPos> out;
  if (!best) return out;
  for (auto c : candidates)
    if (manhattan(c, prev) == *best) out.insert(c);
  return out;
}

inline std::set<CellPos> valid_candidates(const TimestepInput& in, const Grid& grid) {
  std::set<CellPos> out;
  for (const auto& [p, _] : in.rssi)
    if (!grid.is_wall(p)) out.insert(p);
  for (const auto& [p, _] : in.sensed)
    if (!grid.is_wall(p)) out.insert(p);
  return out;
}

inline std::optional<Selection> select_position(const Grid& grid, const TimestepInput& in,
                                                std::optional<CellPos> prev) {
  const auto cands = valid_candidates(in, grid);
  if (cands.empty()) return std::nullopt;

  Selection sel;
  sel.time = in.time;
  int top = -1;
  for (auto c : cands) {
    int k = coherence(c, in, grid);
    sel.coherence[c] = k;
    top = std::max(top, k);
  }
  std::set<CellPos> coherent;
  for (const auto& [c, k] : sel.coherence)
    if (k == top) coherent.insert(c);

  std::set<CellPos> moving;
  if (prev) {
    for (auto c : cands) sel.distance[c] = manhattan(c, *prev);
    moving = best_movement(cands, *prev);
  }

  std::set<CellPos> scorable;
  for (auto c : cands)
    if (in.rssi.count(c)) scorable.insert(c);
  const bool has_rssi = !scorable.empty();
  if (!has_rssi) scorable = cands;

  auto score = [&](CellPos c) -> std::int64_t {
    if (has_rssi) return in.rssi.at(c);
    auto it = in.sensed.find(c);
    return it == in.sensed.end() ? 0 : static_cast<std::int64_t>(it->second.size());
  };

  std::set<CellPos> both;
  std::set_intersection(moving.begin(), moving.end(), coherent.begin(), coherent.end(),
                        std::inserter(both, both.end()));
  const std::set<CellPos>* tiers[4] = {&both, &moving, &coherent, &cands};
  for (int k = 0; k < 4; ++k) {
    std::vector<CellPos> pool;
    for (auto c : *tiers[k])
      if (scorable.count(c)) pool.push_back(c);
    if (pool.empty()) continue;
    std::int64_t best = score(pool.front());
    for (auto c : pool) best = std::max(best, score(c));
    for (auto c : pool)
      if (score(c) == best) sel.co_optimal.push_back(c);
    sel.cell = sel.co_optimal.front();
    sel.criterion = k + 1;
    return sel;
  }
  return std::nullopt;
}

inline Track localize(const Grid& grid, const FactBase& facts, const LocalizationConfig& cfg = {}) {
  Track track;
  auto inputs = gather_inputs(facts);
  if (inputs.empty() && !(cfg.first && cfg.last)) return track;
  const std::int64_t first = cfg.first.value_or(inputs.empty() ? 0 : inputs.begin()->first);
  const std::int64_t last = cfg.last.value_or(inputs.empty() ? -1 : inputs.rbegin()->first);

  std::optional<CellPos> prev;
  for (std::int64_t t = first; t <= last; ++t) {
    auto it = inputs.find(t);
    std::optional<Selection> sel;
    if (it != inputs.end()) sel = select_position(grid, it->second, prev);
    if (sel) {
      prev = sel->cell;
      track.steps.push_back(std::move(*sel));
    } else {
      prev.reset();
      if (it != inputs.end()) track.skipped.push_back(t);
    }
  }
  return track;
}

inline FactBase track_facts(const Track& track) {
  FactBase out;
  for (const auto& s : track.steps) {
    out.add("at", {Term::compound("loc", {Term::integer(s.cell.x), Term::integer(s.cell.y)}), Term::integer(s.time)});
    out.add("localized", {Term::integer(s.time)});
  }
  return out;
}

// attribute_obj(Attribute, Object, Value, T) values that count as evidence of presence.
inline bool active_state(const Term& v) {
  static const std::set<std::string> on{"on", "open", "yes", "bright", "pressed", "running"};
  return v.is_int() ? v.number > 0 : (v.kind == Term::Kind::symbol && on.count(v.name) > 0);
}

// Room with the most supporting facts at T: sensor readings mapped through
// cell membership, plus active object states mapped through object
// placement. Ties go to the smallest room name.
inline std::optional<std::string> coarse_localize(const EntityModel& home, const FactBase& facts, std::int64_t t) {
  std::map<std::string, int> support;
  for (const Fact* f : facts.at_time("sense", t)) {
    const auto& a = f->args;
    if (!a[1].is_int() || !a[2].is_int()) continue;
    CellPos p{a[1].number, a[2].number};
    if (home.grid.is_wall(p)) continue;
    if (const Cell* c = home.grid.cell_at(p)) ++support[c->room];
  }
  for (const Fact* f : facts.at_time("attribute_obj", t)) {
    const auto& a = f->args;
    if (!a[1].is_symbol() || !active_state(a[2])) continue;
    auto obj = home.objects.find(a[1].name);
    if (obj == home.objects.end()) continue;
    if (auto room = home.room_of(obj->second)) ++support[*room];
  }
  std::optional<std::string> best;
  int count = 0;
  for (const auto& [room, n] : support)
    if (n > count) {
      best = room;
      count = n;
    }
  return best;
}

}  // namespace qhealth
