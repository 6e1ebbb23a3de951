// qhealth: command-line front end for the inference cycle.
//
//   qhealth evaluate --model home.model --facts h10.facts
//   qhealth predict  --model home.model --facts h10.eval.facts --cap 10000
//   qhealth explain  --model home.model --facts h10.eval.facts --class risk
//   qhealth feedback --model home.model --facts h10.facts --policy eve.policy
//   qhealth localize --model home.model --facts track.facts
//   qhealth report   --model home.model --policy eve.policy --day facts/
//   qhealth run      --model home.model --policy eve.policy --day facts/ --out out/

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "qhealth/localization.hpp"
#include "qhealth/pipeline.hpp"

namespace fs = std::filesystem;
using namespace qhealth;

namespace {

struct Options {
  std::string model, facts, policy, day, out, cls = "risk", weights = "eval5";
  int hour = -1;
  std::size_t cap = 10000;
  std::int64_t first = -1, last = -1;
};

struct Failure {
  int code;
  std::string message;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Failure{1, "cannot read " + path};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

template <typename F>
auto with_file(const std::string& path, F&& parse) {
  std::string text = slurp(path);
  try {
    return parse(text);
  } catch (const ParseError& e) {
    throw Failure{1, path + ":" + e.what()};
  } catch (const PolicyError& e) {
    throw Failure{1, path + ":" + e.what()};
  } catch (const ModelError& e) {
    throw Failure{1, path + ": " + e.what()};
  }
}

Model load_model(const Options& o) {
  if (o.model.empty()) throw Failure{1, "--model is required"};
  std::vector<Diagnostic> warnings;
  Model m = with_file(o.model, [&](const std::string& t) { return parse_model(t, &warnings); });
  for (const auto& w : warnings)
    std::cerr << o.model << ":" << w.line << ":" << w.column << ": warning: " << w.message << "\n";
  return m;
}

FactBase load_facts(const std::string& path) {
  std::vector<Diagnostic> warnings;
  FactBase b = with_file(path, [&](const std::string& t) { return parse_facts(t, &warnings); });
  for (const auto& w : warnings) std::cerr << path << ":" << w.line << ":" << w.column << ": warning: " << w.message << "\n";
  return b;
}

FactBase load_facts(const Options& o) {
  if (o.facts.empty()) throw Failure{1, "--facts is required"};
  return load_facts(o.facts);
}

PolicySet load_policy(const Options& o) {
  if (o.policy.empty()) return {};
  return with_file(o.policy, [](const std::string& t) { return parse_policy(t); });
}

int cycle_hour(const Options& o, const FactBase& facts) {
  int h = o.hour >= 0 ? o.hour : facts.hour().value_or(-1);
  if (h < 0 || h > 23) throw Failure{1, "cycle hour missing or outside 0..23 (use --hour or an hour/1 fact)"};
  return h;
}

PredictionConfig prediction_config(const Options& o) {
  PredictionConfig c;
  c.cap = o.cap;
  if (o.weights == "obs5")
    c.weights = WeightConvention::obs5;
  else if (o.weights != "eval5")
    throw Failure{1, "--weight-convention must be eval5 or obs5"};
  return c;
}

CycleConfig cycle_config(const Options& o) {
  CycleConfig c;
  c.prediction = prediction_config(o);
  if (o.cls.rfind("custom:", 0) == 0) {
    std::istringstream in(slurp(o.cls.substr(7)));
    std::set<std::string> items;
    for (std::string w; in >> w;) items.insert(w);
    c.explain_items = std::move(items);
  } else if (auto cls = item_class_from_string(o.cls)) {
    c.explain_class = *cls;
  } else {
    throw Failure{1, "--class must be state, functionalities, adl, risk or custom:<file>"};
  }
  return c;
}

// Writes to <out>/<name> when an output directory is set, else stdout.
void emit(const Options& o, const std::string& name, const std::string& text) {
  if (o.out.empty()) {
    std::cout << text;
    return;
  }
  fs::create_directories(o.out);
  std::ofstream f(fs::path(o.out) / name, std::ios::binary);
  if (!f) throw Failure{1, "cannot write " + (fs::path(o.out) / name).string()};
  f << text;
}

void check_targets(const DependencyGraph& g, const CycleConfig& cfg) {
  for (const auto& t : explanation_targets(g, cfg))
    if (!g.find_item(t)) throw Failure{1, "explanation target '" + t + "' is not an item of the model"};
}

int cmd_evaluate(const Options& o) {
  Model m = load_model(o);
  FactBase facts = load_facts(o);
  auto r = evaluate_cycle(m.graph, facts, cycle_hour(o, facts));
  emit(o, "evaluate.facts", emit_facts(evaluation_facts(r)));
  return 0;
}

int cmd_predict(const Options& o) {
  Model m = load_model(o);
  FactBase facts = load_facts(o);
  auto partial = labeling_from_facts(m.graph, facts);
  auto r = predict(m.graph, partial, prediction_config(o));
  emit(o, "predict.facts", emit_facts(prediction_facts(r, facts.hour())));
  if (!o.out.empty()) {
    std::string log;
    for (const auto& s : r.all_solutions) log += to_json(s).dump() + "\n";
    emit(o, "solutions.log", log);
  }
  if (r.truncated) std::cerr << "warning: solution cap reached; robust signs are approximate\n";
  if (r.fallback) {
    std::cerr << "error: observations admit no consistent labeling; wrote maximal partial labelings\n";
    return 2;
  }
  return 0;
}

int cmd_explain(const Options& o) {
  Model m = load_model(o);
  FactBase facts = load_facts(o);
  auto cfg = cycle_config(o);
  check_targets(m.graph, cfg);
  auto r = predict(m.graph, labeling_from_facts(m.graph, facts), cfg.prediction);
  auto forest = explain(m.graph, r.optimal, explanation_targets(m.graph, cfg), &r.robust, cfg.explanation);
  emit(o, "explain.txt", explanation_report(forest, r.optimal));
  if (!o.out.empty()) emit(o, "explain.facts", emit_facts(explanation_facts(forest)));
  return 0;
}

int cmd_feedback(const Options& o) {
  Model m = load_model(o);
  FactBase facts = load_facts(o);
  auto cfg = cycle_config(o);
  check_targets(m.graph, cfg);
  DayRunner day(std::move(m), load_policy(o), cfg);
  const auto& rec = day.run_cycle(facts, cycle_hour(o, facts), false);
  emit(o, "feedback.facts", emit_facts(decision_facts(rec.decision)));
  if (!o.out.empty()) emit(o, "report.txt", render_day_report(day.cycles(), day.reactions(), day.policy()));
  return 0;
}

int cmd_localize(const Options& o) {
  Model m = load_model(o);
  FactBase facts = load_facts(o);
  LocalizationConfig cfg;
  if (o.first >= 0) cfg.first = o.first;
  if (o.last >= 0) cfg.last = o.last;
  auto track = localize(m.entities.grid, facts, cfg);
  emit(o, "localize.facts", emit_facts(track_facts(track)));
  for (auto t : track.skipped) std::cerr << "note: no valid candidate at time " << t << "\n";
  return 0;
}

std::vector<std::pair<int, fs::path>> day_files(const Options& o) {
  if (o.day.empty()) throw Failure{1, "--day <directory> is required"};
  static const std::regex name(R"(h(\d{1,2})\.facts)");
  std::vector<std::pair<int, fs::path>> files;
  std::error_code ec;
  for (const auto& e : fs::directory_iterator(o.day, ec)) {
    std::smatch m;
    const std::string fn = e.path().filename().string();
    if (std::regex_match(fn, m, name)) files.emplace_back(std::stoi(m[1]), e.path());
  }
  if (ec) throw Failure{1, "cannot list " + o.day + ": " + ec.message()};
  std::sort(files.begin(), files.end());
  for (const auto& [h, p] : files)
    if (h > 23) throw Failure{1, p.string() + ": hour outside 0..23"};
  return files;
}

int run_day(const Options& o, bool artifacts) {
  Model m = load_model(o);
  auto cfg = cycle_config(o);
  check_targets(m.graph, cfg);
  DayRunner day(std::move(m), load_policy(o), cfg);
  std::string log;
  int status = 0;
  for (const auto& [hour, path] : day_files(o)) {
    const auto& rec = day.run_cycle(load_facts(path.string()), hour);
    log += run_log_line(rec);
    if (rec.prediction.fallback) {
      std::cerr << path.string() << ": observations admit no consistent labeling; fallback used\n";
      status = 2;
    }
    if (artifacts) {
      char name[32];
      std::snprintf(name, sizeof name, "h%02d.out.facts", hour);
      emit(o, name, emit_facts(rec.output));
    }
  }
  if (artifacts) emit(o, "run.log", log);
  emit(o, "report.txt", render_day_report(day.cycles(), day.reactions(), day.policy()));
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qualitative health evolution reasoning"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* c, bool facts) {
    c->add_option("--model", o.model, "model file")->required();
    if (facts) c->add_option("--facts", o.facts, "facts file")->required();
    c->add_option("--out", o.out, "output directory (default: stdout)");
  };
  auto solver = [&](CLI::App* c) {
    c->add_option("--cap", o.cap, "maximum number of stored solutions")->check(CLI::PositiveNumber);
    c->add_option("--weight-convention", o.weights, "eval5 or obs5")->check(CLI::IsMember({"eval5", "obs5"}));
  };
  auto hour = [&](CLI::App* c) { c->add_option("--hour", o.hour, "cycle hour 0..23")->check(CLI::Range(0, 23)); };
  auto cls = [&](CLI::App* c) {
    c->add_option("--class", o.cls, "state, functionalities, adl, risk or custom:<file>");
  };

  auto* evaluate = app.add_subcommand("evaluate", "differential evaluation of one cycle");
  common(evaluate, true);
  hour(evaluate);
  auto* pred = app.add_subcommand("predict", "complete a partial labeling");
  common(pred, true);
  solver(pred);
  auto* expl = app.add_subcommand("explain", "explain robust predictions");
  common(expl, true);
  solver(expl);
  cls(expl);
  auto* feedback = app.add_subcommand("feedback", "run one full cycle and apply the policy");
  common(feedback, true);
  solver(feedback);
  hour(feedback);
  cls(feedback);
  feedback->add_option("--policy", o.policy, "policy file")->required();
  auto* loc = app.add_subcommand("localize", "cell-level tracking");
  common(loc, true);
  loc->add_option("--first", o.first, "first timestep of the horizon");
  loc->add_option("--last", o.last, "last timestep of the horizon");
  auto* report = app.add_subcommand("report", "end-of-day report over a directory of hNN.facts files");
  auto* run = app.add_subcommand("run", "run every hourly cycle of a day and keep all artifacts");
  for (auto* c : {report, run}) {
    common(c, false);
    solver(c);
    cls(c);
    c->add_option("--policy", o.policy, "policy file")->required();
    c->add_option("--day", o.day, "directory of hNN.facts files")->required();
  }

  CLI11_PARSE(app, argc, argv);

  try {
    if (*evaluate) return cmd_evaluate(o);
    if (*pred) return cmd_predict(o);
    if (*expl) return cmd_explain(o);
    if (*feedback) return cmd_feedback(o);
    if (*loc) return cmd_localize(o);
    if (*report) return run_day(o, false);
    if (*run) return run_day(o, true);
  } catch (const Failure& f) {
    std::cerr << "error: " << f.message << "\n";
    return f.code;
  } catch (const PolicyStepError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
