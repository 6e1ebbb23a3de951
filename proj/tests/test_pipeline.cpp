#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "qhealth/pipeline.hpp"

using namespace qhealth;
namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const fs::path kEve = fs::path(QHEALTH_SAMPLES) / "eve";

DayRunner eve_day() {
  return DayRunner(parse_model(read_file(kEve / "eve.model")), parse_policy(read_file(kEve / "eve.policy")));
}

void run_eve(DayRunner& day) {
  for (int h : {10, 14, 20}) {
    char name[16];
    std::snprintf(name, sizeof name, "h%02d.facts", h);
    day.run_cycle(parse_facts(read_file(kEve / "day" / name)), h);
  }
}

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("qhealth_test_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int cli(const std::string& args, const fs::path& stdout_file = {}) {
  std::string cmd = std::string("\"") + QHEALTH_CLI + "\" " + args;
  if (!stdout_file.empty()) cmd += " > \"" + stdout_file.string() + "\"";
  cmd += " 2>/dev/null";
  int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

TEST(Eve, FirstCycleSuggestsFourFallPreventionOutputs) {
  auto day = eve_day();
  run_eve(day);
  const auto& first = day.cycles()[0].decision;
  for (const char* o : {"remove_clutter", "stand_up_slowly", "use_chair_to_get_dressed", "keep_active"}) {
    ASSERT_NE(first.chosen(o), nullptr) << o;
    EXPECT_EQ(first.chosen(o)->form, Form::suggestion) << o;
  }
  EXPECT_EQ(day.cycles()[0].prediction.robust.at("falls"), Sign::minus);
}

TEST(Eve, DarkWalkEscalatesToAlert) {
  auto day = eve_day();
  run_eve(day);
  const auto* before = day.cycles()[1].decision.chosen("do_not_walk_in_the_dark");
  const auto* after = day.cycles()[2].decision.chosen("do_not_walk_in_the_dark");
  ASSERT_NE(before, nullptr);
  ASSERT_NE(after, nullptr);
  EXPECT_EQ(before->form, Form::suggestion);
  EXPECT_EQ(after->form, Form::alert);
}

TEST(Eve, EscalationOnlyMovesUp) {
  auto day = eve_day();
  run_eve(day);
  std::map<std::string, Form> last;
  for (const auto& c : day.cycles())
    for (const auto& chosen : c.decision.forms) {
      if (auto it = last.find(chosen.output); it != last.end())
        EXPECT_GE(urgency(chosen.form), urgency(it->second)) << chosen.output << " at " << c.hour;
      last[chosen.output] = chosen.form;
    }
}

TEST(Eve, ReportContainsNotificationAfterReaction) {
  auto day = eve_day();
  run_eve(day);
  ASSERT_EQ(day.reactions().size(), 1u);
  EXPECT_EQ(day.reactions()[0].output, "keep_active");
  auto report = render_day_report(day.cycles(), day.reactions(), day.policy());
  auto notes = report.find("notifications\n");
  auto sugg = report.find("suggestions\n");
  ASSERT_NE(notes, std::string::npos);
  EXPECT_NE(report.substr(notes, sugg - notes).find("keep_active"), std::string::npos);
  auto alerts = report.find("alerts\n");
  EXPECT_NE(report.substr(alerts, report.find("reminders\n") - alerts).find("do_not_walk_in_the_dark"),
            std::string::npos);
  EXPECT_NE(report.find("became_active after keep_active"), std::string::npos);
}

TEST(Eve, RunLogIsValidJson) {
  auto day = eve_day();
  run_eve(day);
  for (const auto& c : day.cycles()) {
    auto j = nlohmann::json::parse(run_log_line(c));
    EXPECT_EQ(j["hour"], c.hour);
    EXPECT_EQ(j["solutions"].size(), c.prediction.all_solutions.size());
  }
}

TEST(Cli, DayRunIsByteIdentical) {
  auto a = scratch("run_a"), b = scratch("run_b");
  const std::string common = "run --model \"" + (kEve / "eve.model").string() + "\" --policy \"" +
                             (kEve / "eve.policy").string() + "\" --day \"" + (kEve / "day").string() + "\"";
  ASSERT_EQ(cli(common + " --out \"" + a.string() + "\""), 0);
  ASSERT_EQ(cli(common + " --out \"" + b.string() + "\""), 0);
  for (const char* f : {"report.txt", "run.log", "h10.out.facts", "h14.out.facts", "h20.out.facts"}) {
    auto x = read_file(a / f);
    EXPECT_FALSE(x.empty()) << f;
    EXPECT_EQ(x, read_file(b / f)) << f;
  }
  auto day = eve_day();
  run_eve(day);
  EXPECT_EQ(read_file(a / "report.txt"), render_day_report(day.cycles(), day.reactions(), day.policy()));
}

TEST(Cli, EvaluateFeedsPredict) {
  auto dir = scratch("chain");
  const std::string model = "--model \"" + (kEve / "eve.model").string() + "\"";
  ASSERT_EQ(cli("evaluate " + model + " --facts \"" + (kEve / "day" / "h10.facts").string() + "\" --out \"" +
                dir.string() + "\""),
            0);
  ASSERT_EQ(cli("predict " + model + " --facts \"" + (dir / "evaluate.facts").string() + "\" --out \"" +
                dir.string() + "\""),
            0);
  auto m = parse_model(read_file(kEve / "eve.model"));
  auto eval = evaluate_cycle(m.graph, parse_facts(read_file(kEve / "day" / "h10.facts")), 10);
  auto expected = predict(m.graph, eval.labeling);
  EXPECT_EQ(parse_facts(read_file(dir / "predict.facts")), prediction_facts(expected, 10));
  std::istringstream log(read_file(dir / "solutions.log"));
  std::size_t lines = 0;
  for (std::string l; std::getline(log, l); ++lines) EXPECT_NO_THROW(nlohmann::json::parse(l));
  EXPECT_EQ(lines, expected.all_solutions.size());
}

TEST(Cli, LocalizeSample) {
  auto dir = scratch("loc");
  const fs::path loc = fs::path(QHEALTH_SAMPLES) / "localization";
  ASSERT_EQ(cli("localize --model \"" + (loc / "grid4.model").string() + "\" --facts \"" +
                (loc / "track.facts").string() + "\"", dir / "out.facts"),
            0);
  auto out = parse_facts(read_file(dir / "out.facts"));
  EXPECT_EQ(out.with_predicate("localized").size(), 4u);
}

TEST(Cli, ErrorsExitNonZero) {
  auto dir = scratch("bad");
  std::ofstream(dir / "bad.model") << "link(dir, a, b).\n";
  std::ofstream(dir / "bad.facts") << "obsInd(a, 1, 0\n";
  EXPECT_NE(cli("evaluate --model \"" + (dir / "bad.model").string() + "\" --facts \"" +
                (dir / "bad.facts").string() + "\" --hour 3"),
            0);
  EXPECT_NE(cli("evaluate --model \"" + (kEve / "eve.model").string() + "\" --facts \"" +
                (dir / "bad.facts").string() + "\" --hour 3"),
            0);
  EXPECT_NE(cli("evaluate --model \"" + (kEve / "eve.model").string() + "\" --facts \"" +
                (kEve / "day" / "h10.facts").string() + "\" --hour 30"),
            0);
  EXPECT_NE(cli("bogus"), 0);
  EXPECT_NE(cli("explain --model \"" + (kEve / "eve.model").string() + "\" --facts \"" +
                (kEve / "day" / "h10.facts").string() + "\" --class nonsense"),
            0);
}
