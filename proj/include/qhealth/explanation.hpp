#pragma once
// Local explanation: backward chains of sign-contributing influence arcs
// that justify predicted signs, chosen jointly across a set of targets so
// that shared arcs are reused (minimal number of distinct arcs).

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "qhealth/core.hpp"
#include "qhealth/facts.hpp"
#include "qhealth/prediction.hpp"

namespace qhealth {

struct ExplanationPath {
  std::string root;
  std::vector<Arc> arcs;          // breadth-first from the root, target -> source
  std::vector<bool> contributing;  // parallel to arcs
  bool operator==(const ExplanationPath&) const = default;
};

struct ExplanationForest {
  std::map<std::string, ExplanationPath> paths;
  std::map<Arc, int> shared;                   // arc -> number of paths using it
  std::map<std::string, std::string> rejected;  // target -> diagnostic
  bool exhaustive = true;                       // false when a search budget ran out
};

enum class ExplanationMode : std::uint8_t {
  joint,        // minimize distinct arcs over the whole forest
  independent,  // minimize each path on its own
};

struct ExplanationConfig {
  ExplanationMode mode = ExplanationMode::joint;
  std::size_t trees_per_target = 5000;
  std::uint64_t node_budget = 5'000'000;
};

inline std::size_t explanation_cost(const ExplanationForest& f) {
  std::set<Arc> arcs;
  for (const auto& [root, p] : f.paths) arcs.insert(p.arcs.begin(), p.arcs.end());
  return arcs.size();
}

inline bool contributes(const Arc& a, const std::map<std::string, Sign>& labeling) {
  auto s = labeling.find(a.source), t = labeling.find(a.target);
  if (s == labeling.end() || t == labeling.end() || !is_determinate(t->second)) return false;
  return arc_effect(s->second, a.kind) == t->second;
}

namespace detail {

class ExplanationSearch {
 public:
  ExplanationSearch(const DependencyGraph& graph, const Solution& sol, const ExplanationConfig& cfg)
      : sol_(sol), cfg_(cfg) {
    for (const auto& a : graph.arcs()) {
      if (a.layer != ArcLayer::item_to_item) continue;
      has_incoming_.insert(a.target);
      if (contributes(a, sol.labeling)) arcs_.push_back(a);
    }
    std::sort(arcs_.begin(), arcs_.end());
    for (int i = 0; i < static_cast<int>(arcs_.size()); ++i) in_[arcs_[i].target].push_back(i);
  }

  const std::vector<Arc>& arcs() const noexcept { return arcs_; }
  bool budget_hit() const noexcept { return budget_hit_; }

  // Inclusion-minimal valid trees for `root`, each a sorted list of arc
  // indices, in lexicographic order.
  std::vector<std::vector<int>> trees(const std::string& root) {
    root_ = root;
    found_.clear();
    std::vector<std::string> order{root};
    std::set<std::string> nodes{root};
    std::vector<int> chosen;
    expand(0, order, nodes, chosen);

    std::sort(found_.begin(), found_.end(),
              [](const auto& a, const auto& b) { return a.size() != b.size() ? a.size() < b.size() : a < b; });
    found_.erase(std::unique(found_.begin(), found_.end()), found_.end());
    std::vector<std::vector<int>> minimal;
    for (const auto& t : found_) {
      bool dominated = std::any_of(minimal.begin(), minimal.end(), [&](const auto& m) {
        return std::includes(t.begin(), t.end(), m.begin(), m.end());
      });
      if (!dominated) minimal.push_back(t);
    }
    std::sort(minimal.begin(), minimal.end());
    return minimal;
  }

 private:
  bool expandable(const std::string& v) const {
    if (v == root_) return true;
    auto it = sol_.provenance.find(v);
    return it != sol_.provenance.end() && it->second == Provenance::guessed;
  }

  const std::vector<int>& incoming(const std::string& v) const {
    static const std::vector<int> none;
    auto it = in_.find(v);
    return it == in_.end() ? none : it->second;
  }

  // A node with no chosen in-arc is fine only if every contributing in-arc
  // would close a cycle.
  bool complete(const std::set<std::string>& nodes, const std::vector<int>& chosen) const {
    std::set<std::string> has_child;
    for (int i : chosen) has_child.insert(arcs_[i].target);
    for (const auto& v : nodes) {
      if (!expandable(v) || !has_incoming_.count(v) || has_child.count(v)) continue;
      for (int i : incoming(v))
        if (!nodes.count(arcs_[i].source)) return false;
    }
    return true;
  }

  void expand(std::size_t pos, std::vector<std::string>& order, std::set<std::string>& nodes,
              std::vector<int>& chosen) {
    if (budget_hit_ || found_.size() >= cfg_.trees_per_target) return;
    if (++nodes_visited_ > cfg_.node_budget) {
      budget_hit_ = true;
      return;
    }
    if (pos == order.size()) {
      if (complete(nodes, chosen)) {
        auto t = chosen;
        std::sort(t.begin(), t.end());
        found_.push_back(std::move(t));
      }
      return;
    }
    const std::string v = order[pos];
    if (!expandable(v)) return expand(pos + 1, order, nodes, chosen);

    // Candidate arcs have a source new to the tree; arcs sharing a source
    // are alternatives.
    std::map<std::string, std::vector<int>> by_source;
    for (int i : incoming(v))
      if (!nodes.count(arcs_[i].source)) by_source[arcs_[i].source].push_back(i);
    std::vector<std::vector<int>> groups;
    for (auto& [s, g] : by_source) groups.push_back(g);

    // Every selection of at most one arc per source group, smallest first.
    const std::size_t n = groups.size();
    std::vector<std::vector<int>> selections{{}};
    for (std::size_t k = 1; k <= n; ++k) {
      std::vector<std::size_t> idx(k);
      for (std::size_t i = 0; i < k; ++i) idx[i] = i;
      while (true) {
        std::vector<std::size_t> pick(k, 0);
        while (true) {
          std::vector<int> sel;
          for (std::size_t i = 0; i < k; ++i) sel.push_back(groups[idx[i]][pick[i]]);
          selections.push_back(sel);
          std::size_t j = k;
          while (j > 0 && ++pick[j - 1] == groups[idx[j - 1]].size()) pick[--j] = 0;
          if (j == 0) break;
        }
        std::size_t i = k;
        while (i > 0 && idx[i - 1] == n - k + i - 1) --i;
        if (i == 0) break;
        ++idx[i - 1];
        for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
      }
    }
    for (const auto& sel : selections) {
      for (int i : sel) {
        nodes.insert(arcs_[i].source);
        order.push_back(arcs_[i].source);
        chosen.push_back(i);
      }
      expand(pos + 1, order, nodes, chosen);
      for (std::size_t j = 0; j < sel.size(); ++j) {
        nodes.erase(order.back());
        order.pop_back();
        chosen.pop_back();
      }
      if (budget_hit_ || found_.size() >= cfg_.trees_per_target) return;
    }
  }

  const Solution& sol_;
  ExplanationConfig cfg_;
  std::vector<Arc> arcs_;
  std::map<std::string, std::vector<int>> in_;
  std::set<std::string> has_incoming_;
  std::string root_;
  std::vector<std::vector<int>> found_;
  std::uint64_t nodes_visited_ = 0;
  bool budget_hit_ = false;
};

// Branch-and-bound over one tree per target minimizing the union size.
// Trees are visited in lexicographic order, so the first forest found at
// the optimal cost is the canonical one.
inline std::vector<std::size_t> best_forest(const std::vector<std::vector<std::vector<int>>>& options,
                                            std::size_t arc_count) {
  const std::size_t n = options.size();
  std::vector<std::size_t> pick(n, 0), best;
  std::size_t best_cost = SIZE_MAX;
  std::vector<int> use(arc_count, 0);
  std::size_t used = 0;

  auto extra = [&](const std::vector<int>& t) {
    std::size_t e = 0;
    for (int i : t)
      if (!use[i]) ++e;
    return e;
  };
  auto rec = [&](auto& self, std::size_t k) -> void {
    if (k == n) {
      if (used < best_cost) {
        best_cost = used;
        best = pick;
      }
      return;
    }
    std::size_t bound = 0;
    for (std::size_t r = k; r < n; ++r) {
      std::size_t m = SIZE_MAX;
      for (const auto& t : options[r]) m = std::min(m, extra(t));
      bound = std::max(bound, m);
    }
    if (used + bound >= best_cost) return;
    for (std::size_t j = 0; j < options[k].size(); ++j) {
      pick[k] = j;
      for (int i : options[k][j])
        if (use[i]++ == 0) ++used;
      self(self, k + 1);
      for (int i : options[k][j])
        if (--use[i] == 0) --used;
    }
  };
  rec(rec, 0);
  return best;
}

inline ExplanationPath make_path(const std::string& root, const std::vector<int>& tree, const std::vector<Arc>& arcs) {
  ExplanationPath p{root, {}, {}};
  std::vector<std::string> frontier{root};
  std::set<int> left(tree.begin(), tree.end());
  for (std::size_t i = 0; i < frontier.size(); ++i) {
    for (auto it = left.begin(); it != left.end();) {
      if (arcs[*it].target == frontier[i]) {
        p.arcs.push_back(arcs[*it]);
        p.contributing.push_back(true);
        frontier.push_back(arcs[*it].source);
        it = left.erase(it);
      } else {
        ++it;
      }
    }
  }
  return p;
}

}  // namespace detail

// Explains each target's sign in `sol`. When `robust` is given, targets must
// carry their robust sign; others are rejected with a diagnostic.
inline ExplanationForest explain(const DependencyGraph& graph, const Solution& sol,
                                 const std::set<std::string>& targets,
                                 const std::map<std::string, Sign>* robust = nullptr,
                                 const ExplanationConfig& cfg = {}) {
  ExplanationForest forest;
  detail::ExplanationSearch search(graph, sol, cfg);
  std::vector<std::string> accepted;
  for (const auto& t : targets) {
    if (!graph.find_item(t)) {
      forest.rejected[t] = "not an item of the model";
      continue;
    }
    auto it = sol.labeling.find(t);
    if (it == sol.labeling.end() || !is_determinate(it->second)) {
      forest.rejected[t] = "no determinate sign to explain";
      continue;
    }
    if (robust) {
      auto r = robust->find(t);
      if (r == robust->end() || r->second != it->second) {
        forest.rejected[t] = "sign is not the same in all solutions";
        continue;
      }
    }
    accepted.push_back(t);
  }

  std::vector<std::vector<std::vector<int>>> options;
  for (const auto& t : accepted) {
    auto trees = search.trees(t);
    if (trees.empty()) trees.push_back({});
    options.push_back(std::move(trees));
  }
  forest.exhaustive = !search.budget_hit();

  std::vector<std::size_t> pick(options.size(), 0);
  if (cfg.mode == ExplanationMode::joint) {
    pick = detail::best_forest(options, search.arcs().size());
  } else {
    for (std::size_t k = 0; k < options.size(); ++k) {
      for (std::size_t j = 1; j < options[k].size(); ++j)
        if (options[k][j].size() < options[k][pick[k]].size()) pick[k] = j;
    }
  }
  for (std::size_t k = 0; k < accepted.size(); ++k) {
    auto path = detail::make_path(accepted[k], options[k][pick[k]], search.arcs());
    for (const auto& a : path.arcs) ++forest.shared[a];
    forest.paths.emplace(accepted[k], std::move(path));
  }
  return forest;
}

// Arc lines `src -(type)-> dst [sign]` per explained target.
inline std::string explanation_report(const ExplanationForest& f, const Solution& sol) {
  std::string out;
  for (const auto& [root, p] : f.paths) {
    out += root + " " + std::string(symbol(sol.labeling.at(root))) + "\n";
    if (p.arcs.empty()) out += "  (no incoming justification)\n";
    for (const auto& a : p.arcs)
      out += "  " + a.source + " -(" + std::string(to_string(a.kind)) + ")-> " + a.target + " [" +
             std::string(symbol(sol.labeling.at(a.source))) + "]\n";
  }
  for (const auto& [t, why] : f.rejected) out += t + " rejected: " + why + "\n";
  return out;
}

inline FactBase explanation_facts(const ExplanationForest& f) {
  FactBase out;
  for (const auto& [root, p] : f.paths)
    for (const auto& a : p.arcs)
      out.add("expl_arc", {Term::sym(root), Term::sym(a.source), Term::sym(a.target),
                           Term::sym(std::string(to_string(a.kind)))});
  return out;
}

}  // namespace qhealth
