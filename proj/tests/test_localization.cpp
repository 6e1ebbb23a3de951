#include <gtest/gtest.h>

#include <fstream>
#include <regex>
#include <sstream>

#include "oracles/localization_oracle.hpp"
#include "qhealth/localization.hpp"
#include "qhealth/model_io.hpp"
#include "support/generators.hpp"

using namespace qhealth;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<oracle::Choice> choices(const Track& t) {
  std::vector<oracle::Choice> out;
  for (const auto& s : t.steps)
    out.push_back({static_cast<int>(s.cell.x), static_cast<int>(s.cell.y), static_cast<int>(s.time), s.criterion});
  return out;
}

Grid open_grid(int w, int h) {
  Grid g;
  for (int x = 0; x < w; ++x)
    for (int y = 0; y < h; ++y) g.cells[{x, y}] = Cell{{x, y}, "room", "none"};
  return g;
}

}  // namespace

TEST(Coherence, Percentages) {
  Grid g = open_grid(2, 1);
  g.expected[{0, 0}] = {"motion", "pressure", "distance"};
  TimestepInput in;
  in.sensed[{0, 0}] = {"motion", "contact"};
  EXPECT_EQ(coherence({0, 0}, in, g), 33);
  EXPECT_EQ(coherence({1, 0}, in, g), 100);
  in.sensed[{0, 0}] = {"motion", "pressure", "distance"};
  EXPECT_EQ(coherence({0, 0}, in, g), 100);
}

TEST(BestMovement, SmallestPositiveDistance) {
  std::set<CellPos> c{{2, 2}, {2, 3}, {4, 4}, {1, 2}};
  EXPECT_EQ(best_movement(c, {2, 2}), (std::set<CellPos>{{2, 3}, {1, 2}}));
  EXPECT_TRUE(best_movement({{2, 2}}, {2, 2}).empty());
}

TEST(Select, NoPreviousPositionUsesCoherence) {
  Grid g = open_grid(4, 4);
  g.expected[{0, 0}] = {"motion"};
  TimestepInput in;
  in.time = 1;
  in.rssi = {{{0, 0}, 30}, {{1, 1}, 90}};
  auto s = select_position(g, in, std::nullopt);
  ASSERT_TRUE(s);
  // (0,0) expects motion but saw none, so only (1,1) is fully coherent.
  EXPECT_EQ(s->cell, (CellPos{1, 1}));
  EXPECT_EQ(s->criterion, 3);
}

TEST(Select, WallsAreNeverCandidates) {
  Grid g = open_grid(3, 1);
  g.walls.insert({1, 0});
  TimestepInput in;
  in.rssi = {{{1, 0}, 99}};
  EXPECT_FALSE(select_position(g, in, std::nullopt));
  in.sensed[{2, 0}] = {"motion"};
  auto s = select_position(g, in, std::nullopt);
  ASSERT_TRUE(s);
  EXPECT_EQ(s->cell, (CellPos{2, 0}));
}

TEST(Select, TieGoesToSmallestCell) {
  Grid g = open_grid(4, 4);
  TimestepInput in;
  in.rssi = {{{3, 0}, 50}, {{0, 3}, 50}, {{2, 2}, 50}};
  auto s = select_position(g, in, std::nullopt);
  EXPECT_EQ(s->cell, (CellPos{0, 3}));
  EXPECT_EQ(s->co_optimal.size(), 3u);
}

TEST(Localize, SampleTrackMatchesItsComments) {
  auto m = parse_model(read_file(QHEALTH_SAMPLES "/localization/grid4.model"));
  auto text = read_file(QHEALTH_SAMPLES "/localization/track.facts");
  std::vector<oracle::Choice> expected;
  std::regex line(R"(% expected: (\d+) (\d+) (\d+) (\d+))");
  for (std::sregex_iterator it(text.begin(), text.end(), line), end; it != end; ++it)
    expected.push_back({std::stoi((*it)[2]), std::stoi((*it)[3]), std::stoi((*it)[1]), std::stoi((*it)[4])});
  ASSERT_EQ(expected.size(), 4u);
  auto track = localize(m.entities.grid, parse_facts(text));
  EXPECT_EQ(choices(track), expected);
  EXPECT_EQ(track.skipped, (std::vector<std::int64_t>{4}));
  auto out = track_facts(track);
  EXPECT_TRUE(out.contains(Fact("at", {Term::compound("loc", {Term::integer(3), Term::integer(3)}), Term::integer(5)})));
  EXPECT_TRUE(out.contains(Fact("localized", {Term::integer(5)})));
  EXPECT_FALSE(out.contains(Fact("localized", {Term::integer(4)})));
}

TEST(Localize, MatchesBruteForceOnRandomScenarios) {
  gen::Rng rng(8080);
  for (int i = 0; i < 200; ++i) {
    auto s = gen::random_scenario(rng);
    LocalizationConfig cfg;
    cfg.first = 1;
    cfg.last = s.steps;
    auto track = localize(gen::scenario_grid(s), gen::scenario_facts(s), cfg);
    ASSERT_EQ(choices(track), oracle::track(s)) << "scenario " << i;
  }
}

TEST(Localize, EmptyInput) {
  EXPECT_TRUE(localize(open_grid(2, 2), {}).steps.empty());
}

TEST(Coarse, RoomWithMostEvidence) {
  auto m = parse_model(read_file(QHEALTH_SAMPLES "/localization/grid4.model"));
  auto facts = parse_facts(
      "sense(motion, 0, 0, 7).\n"
      "sense(motion, 3, 3, 7).\n"
      "attribute_obj(power, tv, on, 7).\n"
      "attribute_obj(power, stove, off, 7).\n");
  EXPECT_EQ(coarse_localize(m.entities, facts, 7), "living");
  EXPECT_EQ(coarse_localize(m.entities, facts, 8), std::nullopt);
  auto tie = parse_facts("sense(motion, 0, 0, 1).\nsense(motion, 3, 3, 1).\n");
  EXPECT_EQ(coarse_localize(m.entities, tie, 1), "kitchen");
}
