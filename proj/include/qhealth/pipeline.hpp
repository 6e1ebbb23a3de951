#pragma once
// Hourly inference cycle (evaluation, prediction, explanation, feedback),
// the day driver that chains cycles, the JSON-lines run log and the
// end-of-day report.

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "qhealth/evaluation.hpp"
#include "qhealth/explanation.hpp"
#include "qhealth/feedback.hpp"
#include "qhealth/model_io.hpp"
#include "qhealth/prediction.hpp"

namespace qhealth {

struct CycleConfig {
  PredictionConfig prediction;
  ExplanationConfig explanation;
  SleepConfig sleep;
  // Items to explain; when unset, every item of `explain_class`.
  std::optional<std::set<std::string>> explain_items;
  ItemClass explain_class = ItemClass::risk;
};

struct CycleRecord {
  int hour = 0;
  EvaluationResult evaluation;
  PredictionResult prediction;
  ExplanationForest explanation;
  Decision decision;
  std::vector<ReactionEntry> reactions;  // logged during this cycle
  FactBase output;                       // every fact produced by the cycle
};

inline std::set<std::string> explanation_targets(const DependencyGraph& g, const CycleConfig& cfg) {
  if (cfg.explain_items) return *cfg.explain_items;
  auto v = g.items_of_class(cfg.explain_class);
  return {v.begin(), v.end()};
}

// Runs cycles in order and keeps what later cycles and the report need:
// the reaction log and the forms already delivered per output.
class DayRunner {
 public:
  DayRunner(Model model, PolicySet policy, CycleConfig cfg = {})
      : model_(std::move(model)), policy_(std::move(policy)), cfg_(std::move(cfg)) {}

  // `carry_history` adds the previous cycle's current observations as
  // history (H=1) for nodes the new facts do not already cover.
  const CycleRecord& run_cycle(FactBase facts, int hour, bool carry_history = true) {
    if (carry_history) add_history(facts);

    CycleRecord rec;
    rec.hour = hour;
    rec.evaluation = evaluate_cycle(model_.graph, facts, hour, cfg_.sleep);
    rec.prediction = predict(model_.graph, rec.evaluation.labeling, cfg_.prediction);
    rec.explanation = explain(model_.graph, rec.prediction.optimal, explanation_targets(model_.graph, cfg_),
                              &rec.prediction.robust, cfg_.explanation);

    Decision seen;
    for (const auto& [output, form] : delivered_) seen.forms.push_back({output, form, {form}});
    rec.reactions = log_reaction(policy_, seen, facts);
    reactions_.insert(reactions_.end(), rec.reactions.begin(), rec.reactions.end());

    FactBase view = facts;
    FactBase eval_facts = evaluation_facts(rec.evaluation);
    FactBase pred_facts = prediction_facts(rec.prediction);
    FactBase expl_facts = explanation_facts(rec.explanation);
    FactBase react_facts = reaction_facts(reactions_);
    view.append(eval_facts);
    view.append(pred_facts);
    view.append(expl_facts);
    view.append(react_facts);
    rec.decision = step(policy_, view);
    for (const auto& c : rec.decision.forms) delivered_[c.output] = c.form;

    rec.output.append(eval_facts);
    for (const auto& f : pred_facts.facts())
      if (f.predicate != "hour") rec.output.add(f);
    rec.output.append(expl_facts);
    rec.output.append(decision_facts(rec.decision));
    rec.output.append(reaction_facts(rec.reactions));

    previous_ = facts;
    for (const auto& f : rec.evaluation.derived) previous_.add(f);
    cycles_.push_back(std::move(rec));
    return cycles_.back();
  }

  const std::vector<CycleRecord>& cycles() const noexcept { return cycles_; }
  const std::vector<ReactionEntry>& reactions() const noexcept { return reactions_; }
  const Model& model() const noexcept { return model_; }
  const PolicySet& policy() const noexcept { return policy_; }

 private:
  void add_history(FactBase& facts) const {
    for (const char* pred : {"obsInd", "obsItem"}) {
      std::set<std::string> covered;
      for (const Fact* f : facts.at_time(pred, 1))
        if (f->args[0].is_symbol()) covered.insert(f->args[0].name);
      for (const Fact* f : previous_.at_time(pred, 0))
        if (f->args[0].is_symbol() && !covered.count(f->args[0].name))
          facts.add(pred, {f->args[0], f->args[1], Term::integer(1)});
    }
  }

  Model model_;
  PolicySet policy_;
  CycleConfig cfg_;
  FactBase previous_;
  std::map<std::string, Form> delivered_;
  std::vector<ReactionEntry> reactions_;
  std::vector<CycleRecord> cycles_;
};

// ---------------------------------------------------------------------------
// Run log

inline nlohmann::json to_json(const Solution& s) {
  nlohmann::json j;
  j["objective"] = s.objective;
  for (const auto& [item, sign] : s.labeling) {
    j["labeling"][item] = {{"sign", std::string(symbol(sign))},
                           {"provenance", std::string(to_string(s.provenance.at(item)))}};
  }
  for (const auto& [item, t] : s.tallies)
    for (const auto& [sign, w] : t.weights) j["tallies"][item][std::string(symbol(sign))] = w;
  return j;
}

inline nlohmann::json to_json(const CycleRecord& r) {
  nlohmann::json j;
  j["hour"] = r.hour;
  for (const auto& [item, rec] : r.evaluation.labeling.labeled)
    j["labeling"][item] = {{"sign", std::string(symbol(rec.sign))},
                           {"provenance", std::string(to_string(rec.provenance))}};
  j["to_guess"] = r.evaluation.labeling.to_guess;
  j["solutions"] = nlohmann::json::array();
  for (const auto& s : r.prediction.all_solutions) j["solutions"].push_back(to_json(s));
  j["truncated"] = r.prediction.truncated;
  j["fallback"] = r.prediction.fallback;
  j["robust"] = nlohmann::json::object();
  for (const auto& [item, s] : r.prediction.robust) j["robust"][item] = std::string(symbol(s));
  j["optimal"] = to_json(r.prediction.optimal);
  j["explanations"] = nlohmann::json::object();
  for (const auto& [root, p] : r.explanation.paths) {
    auto& arcs = j["explanations"][root] = nlohmann::json::array();
    for (const auto& a : p.arcs) arcs.push_back({a.source, a.target, std::string(to_string(a.kind))});
  }
  j["decision"]["forms"] = nlohmann::json::object();
  for (const auto& c : r.decision.forms) j["decision"]["forms"][c.output] = std::string(to_string(c.form));
  j["decision"]["actions"] = nlohmann::json::array();
  for (const auto& a : r.decision.actions)
    j["decision"]["actions"].push_back({a.subject, a.form, a.action, std::string(to_string(a.time))});
  j["decision"]["prompts"] = nlohmann::json::array();
  for (const auto& p : r.decision.prompts)
    j["decision"]["prompts"].push_back({p.output, std::string(to_string(p.form)), std::string(to_string(p.channel)),
                                        std::string(to_string(p.time))});
  j["reactions"] = nlohmann::json::array();
  for (const auto& e : r.reactions)
    j["reactions"].push_back({e.output, std::string(to_string(e.form)), e.action, e.time});
  return j;
}

inline std::string run_log_line(const CycleRecord& r) { return to_json(r).dump() + "\n"; }

// ---------------------------------------------------------------------------
// End-of-day report

inline std::string render_day_report(const std::vector<CycleRecord>& cycles, const std::vector<ReactionEntry>& reactions,
                                     const PolicySet& policy) {
  struct Delivered {
    Form form;
    int hour;
    PromptTime time;
    std::set<std::string> actions;
  };
  std::map<std::string, Delivered> best;
  for (const auto& c : cycles) {
    for (const auto& chosen : c.decision.forms) {
      auto it = best.find(chosen.output);
      if (it != best.end() && urgency(it->second.form) >= urgency(chosen.form)) continue;
      Delivered d{chosen.form, c.hour, default_prompt_time(chosen.form), {}};
      for (const auto& p : c.decision.prompts)
        if (p.output == chosen.output) d.time = p.time;
      for (const auto& a : c.decision.actions)
        if (a.subject == chosen.output) d.actions.insert(a.action);
      best[chosen.output] = std::move(d);
    }
  }

  std::string out = "daily report\n";
  out += "cycles:";
  for (const auto& c : cycles) out += " " + std::to_string(c.hour);
  out += "\n";

  static const std::pair<Form, const char*> sections[] = {{Form::alarm, "alarms"},
                                                           {Form::alert, "alerts"},
                                                           {Form::reminder, "reminders"},
                                                           {Form::notification, "notifications"},
                                                           {Form::suggestion, "suggestions"}};
  for (const auto& [form, title] : sections) {
    out += "\n" + std::string(title) + "\n";
    bool any = false;
    for (const auto& [output, d] : best) {
      if (d.form != form) continue;
      any = true;
      out += "  " + output + " [hour " + std::to_string(d.hour) + ", " + std::string(to_string(d.time)) + "]";
      if (!d.actions.empty()) {
        out += " actions:";
        for (const auto& a : d.actions) out += " " + a;
      } else if (auto it = policy.outputs.find(output); it != policy.outputs.end()) {
        out += " (" + it->second.action + ")";
      }
      out += "\n";
    }
    if (!any) out += "  none\n";
  }

  out += "\nreactions\n";
  if (reactions.empty()) out += "  none\n";
  for (const auto& r : reactions)
    out += "  " + r.action + " after " + r.output + " (" + std::string(to_string(r.form)) + ") at " +
           std::to_string(r.time) + "\n";

  out += "\npredictions\n";
  bool any_prediction = false;
  for (const auto& c : cycles) {
    std::string line;
    for (const auto& [item, s] : c.prediction.robust)
      if (c.prediction.optimal.provenance.at(item) == Provenance::guessed)
        line += " " + item + " " + std::string(symbol(s));
    if (line.empty()) continue;
    any_prediction = true;
    out += "  hour " + std::to_string(c.hour) + ":" + line + "\n";
  }
  if (!any_prediction) out += "  none\n";

  out += "\nexplanations\n";
  bool any_explanation = false;
  for (const auto& c : cycles) {
    for (const auto& [root, p] : c.explanation.paths) {
      if (p.arcs.empty()) continue;
      any_explanation = true;
      out += "  hour " + std::to_string(c.hour) + " " + root + ":";
      for (const auto& a : p.arcs) out += " " + a.source + " -(" + std::string(to_string(a.kind)) + ")-> " + a.target;
      out += "\n";
    }
  }
  if (!any_explanation) out += "  none\n";
  return out;
}

}  // namespace qhealth
