#pragma once
// Context model of the home: persons, rooms, areas and objects, plus the
// cell grid used for localization.

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "qhealth/core.hpp"

namespace qhealth {

struct CellPos {
  std::int64_t x = 0;
  std::int64_t y = 0;
  auto operator<=>(const CellPos&) const = default;
};

inline std::string to_string(CellPos p) { return "(" + std::to_string(p.x) + "," + std::to_string(p.y) + ")"; }

struct Cell {
  CellPos pos;
  std::string room;
  std::string area;  // "none" when the cell belongs to no area
  bool operator==(const Cell&) const = default;
};

struct Passage {
  CellPos pos;
  std::string room1, area1, room2, area2;
  bool operator==(const Passage&) const = default;
};

struct Grid {
  std::map<CellPos, Cell> cells;
  std::set<CellPos> walls;
  std::vector<Passage> passages;
  // data_ex(Sensor,X,Y): sensor types expected to report at a cell.
  std::map<CellPos, std::set<std::string>> expected;

  bool is_wall(CellPos p) const { return walls.count(p) > 0; }
  const Cell* cell_at(CellPos p) const {
    auto it = cells.find(p);
    return it == cells.end() ? nullptr : &it->second;
  }
  const std::set<std::string>& expected_at(CellPos p) const {
    static const std::set<std::string> none;
    auto it = expected.find(p);
    return it == expected.end() ? none : it->second;
  }
  bool operator==(const Grid&) const = default;
};

// Room/area connectivity derived from passages (the `connected` relation).
inline std::set<std::pair<std::string, std::string>> connected_rooms(const Grid& g) {
  std::set<std::pair<std::string, std::string>> out;
  for (const auto& p : g.passages) {
    if (p.room1 == p.room2) continue;
    out.emplace(p.room1, p.room2);
    out.emplace(p.room2, p.room1);
  }
  return out;
}

struct EntityModel {
  std::set<std::string> persons;
  std::set<std::string> rooms;
  std::map<std::string, std::string> areas;    // area -> room
  std::map<std::string, std::string> objects;  // object -> room or area
  Grid grid;
  bool operator==(const EntityModel&) const = default;

  // Room containing a room-or-area name, if known.
  std::optional<std::string> room_of(const std::string& place) const {
    if (rooms.count(place)) return place;
    auto it = areas.find(place);
    if (it != areas.end()) return it->second;
    return std::nullopt;
  }
};

inline std::vector<Violation> validate_entities(const EntityModel& m) {
  std::vector<Violation> out;
  for (const auto& [area, room] : m.areas) {
    if (!m.rooms.empty() && !m.rooms.count(room))
      out.push_back({Violation::Kind::unresolved_endpoint, area, "area belongs to undeclared room '" + room + "'"});
    if (m.rooms.count(area))
      out.push_back({Violation::Kind::duplicate_node, area, "name used for both a room and an area"});
  }
  for (const auto& [obj, place] : m.objects) {
    if ((!m.rooms.empty() || !m.areas.empty()) && !m.room_of(place))
      out.push_back({Violation::Kind::unresolved_endpoint, obj, "object placed in unknown room/area '" + place + "'"});
  }
  for (const auto& [pos, cell] : m.grid.cells) {
    const std::string subject = "cell" + to_string(pos);
    if (!m.rooms.empty() && !m.rooms.count(cell.room))
      out.push_back({Violation::Kind::unresolved_endpoint, subject, "undeclared room '" + cell.room + "'"});
    if (cell.area != "none") {
      auto it = m.areas.find(cell.area);
      if (it != m.areas.end() && it->second != cell.room)
        out.push_back({Violation::Kind::layer, subject,
                       "area '" + cell.area + "' belongs to room '" + it->second + "', not '" + cell.room + "'"});
    }
  }
  return out;
}

}  // namespace qhealth
