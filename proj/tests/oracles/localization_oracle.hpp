#pragma once
// Brute-force evaluator of the tracking program, one derived relation at a
// time over every cell of a W x H grid:
//   location(L,T)       a reading in(..) or sense(..) at L, L not a wall
//   best_movement(L,T)  locations at the least positive distance to at(T-1)
//   coherence(L,T)      100*C/N over expected sensor types, 100 when N = 0
//   criterion(k,L,T)    1: move & coherent, 2: move, 3: coherent, 4: any
//   best_location(L,T)  within the first criterion whose locations can be
//                       scored: the strongest reading, or when no location
//                       has a reading, the most sensor types
//   at(L,T)             the smallest (X,Y) among best locations

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

namespace oracle {

struct Reading {
  int x, y, t, p;
};
struct Sensed {
  std::string sensor;
  int x, y, t;
};
struct Expected {
  std::string sensor;
  int x, y;
};

struct Scenario {
  int width = 0, height = 0, steps = 0;
  std::set<std::pair<int, int>> walls;
  std::vector<Expected> expected;
  std::vector<Reading> readings;
  std::vector<Sensed> sensed;
};

struct Choice {
  int x, y, t, criterion;
  bool operator==(const Choice&) const = default;
};

inline std::vector<Choice> track(const Scenario& s) {
  std::vector<Choice> out;
  std::optional<std::pair<int, int>> prev;
  for (int t = 1; t <= s.steps; ++t) {
    auto is_location = [&](int x, int y) {
      if (s.walls.count({x, y})) return false;
      for (const auto& r : s.readings)
        if (r.x == x && r.y == y && r.t == t) return true;
      for (const auto& r : s.sensed)
        if (r.x == x && r.y == y && r.t == t) return true;
      return false;
    };
    auto signal = [&](int x, int y) {
      std::optional<int> best;
      for (const auto& r : s.readings)
        if (r.x == x && r.y == y && r.t == t && (!best || r.p > *best)) best = r.p;
      return best;
    };
    auto types_sensed = [&](int x, int y) {
      std::set<std::string> types;
      for (const auto& r : s.sensed)
        if (r.x == x && r.y == y && r.t == t) types.insert(r.sensor);
      return types;
    };
    auto coherence = [&](int x, int y) {
      std::set<std::string> expected;
      for (const auto& e : s.expected)
        if (e.x == x && e.y == y) expected.insert(e.sensor);
      if (expected.empty()) return 100;
      auto got = types_sensed(x, y);
      int c = 0;
      for (const auto& e : expected) c += got.count(e) ? 1 : 0;
      return 100 * c / static_cast<int>(expected.size());
    };

    std::vector<std::pair<int, int>> locations;
    for (int x = 0; x < s.width; ++x)
      for (int y = 0; y < s.height; ++y)
        if (is_location(x, y)) locations.push_back({x, y});
    if (locations.empty()) {
      prev.reset();
      continue;
    }

    int most_coherent = -1;
    for (auto [x, y] : locations) most_coherent = std::max(most_coherent, coherence(x, y));
    std::set<std::pair<int, int>> best_coherence;
    for (auto [x, y] : locations)
      if (coherence(x, y) == most_coherent) best_coherence.insert({x, y});

    std::set<std::pair<int, int>> best_movement;
    if (prev) {
      int best_distance = -1;
      for (auto [x, y] : locations) {
        int d = std::abs(x - prev->first) + std::abs(y - prev->second);
        if (d > 0 && (best_distance < 0 || d < best_distance)) best_distance = d;
      }
      for (auto [x, y] : locations)
        if (std::abs(x - prev->first) + std::abs(y - prev->second) == best_distance) best_movement.insert({x, y});
    }

    bool has_rssi = false;
    for (auto [x, y] : locations) has_rssi |= signal(x, y).has_value();

    std::optional<Choice> chosen;
    for (int k = 1; k <= 4 && !chosen; ++k) {
      std::vector<std::pair<int, int>> members;
      for (auto l : locations) {
        bool in = k == 1 ? best_movement.count(l) && best_coherence.count(l)
                : k == 2 ? best_movement.count(l) > 0
                : k == 3 ? best_coherence.count(l) > 0
                         : true;
        if (in && (!has_rssi || signal(l.first, l.second))) members.push_back(l);
      }
      if (members.empty()) continue;
      auto value = [&](std::pair<int, int> l) {
        return has_rssi ? *signal(l.first, l.second) : static_cast<int>(types_sensed(l.first, l.second).size());
      };
      int best_value = value(members.front());
      for (auto l : members) best_value = std::max(best_value, value(l));
      for (auto l : members)  // members are already in (X,Y) order
        if (value(l) == best_value) {
          chosen = Choice{l.first, l.second, t, k};
          break;
        }
    }
    if (chosen) {
      out.push_back(*chosen);
      prev = {chosen->x, chosen->y};
    } else {
      prev.reset();
    }
  }
  return out;
}

}  // namespace oracle
