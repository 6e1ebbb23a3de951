#pragma once
// Prediction over the item layer: enumerates every consistent completion of
// a partial labeling, tallies weighted support per sign, and extracts the
// robust signs and the weight-maximal solution.
//
// A guessed item is consistent when its sign is one of the determinate
// signs produced by its incoming influence arcs under the same labeling, or
// `unknown` when no incoming arc produces a determinate sign. Observed and
// evaluation-inferred items are fixed.

#include <algorithm>
#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "qhealth/core.hpp"
#include "qhealth/evaluation.hpp"
#include "qhealth/facts.hpp"

namespace qhealth {

// eval5: anything labeled by the evaluation phase weighs 5.
// obs5: only direct observations weigh 5; evaluation-inferred labels weigh 1.
enum class WeightConvention : std::uint8_t { eval5, obs5 };

struct PredictionConfig {
  WeightConvention weights = WeightConvention::eval5;
  std::size_t cap = 10000;
  // Search-node budget for the branch-and-bound optimum used when the
  // enumeration was truncated.
  std::uint64_t optimize_node_limit = 200'000;
};

inline int arc_weight(Provenance source, WeightConvention convention = WeightConvention::eval5) noexcept {
  switch (source) {
    case Provenance::observed: return 5;
    case Provenance::inferred: return convention == WeightConvention::eval5 ? 5 : 1;
    case Provenance::guessed: return 1;
  }
  return 1;
}

struct SupportTally {
  std::string item;
  std::map<Sign, std::int64_t> weights;  // only non-empty buckets
  bool operator==(const SupportTally&) const = default;
};

struct Solution {
  std::map<std::string, Sign> labeling;
  std::map<std::string, Provenance> provenance;
  std::map<std::string, SupportTally> tallies;  // guessed items
  std::int64_t objective = 0;
  bool operator==(const Solution&) const = default;
};

// Canonical order: item names ascending, signs ? < - < = < +.
inline bool labeling_less(const Solution& a, const Solution& b) {
  return std::lexicographical_compare(a.labeling.begin(), a.labeling.end(), b.labeling.begin(), b.labeling.end(),
                                      [](const auto& x, const auto& y) {
                                        if (x.first != y.first) return x.first < y.first;
                                        return sign_rank(x.second) < sign_rank(y.second);
                                      });
}

struct PredictionResult {
  std::map<std::string, Sign> robust;
  Solution optimal;
  std::vector<Solution> all_solutions;
  bool truncated = false;    // enumeration stopped at the cap
  bool approximate = false;  // robust signs computed from a truncated set
  bool fallback = false;     // no strict solution; maximal partial labelings used
  // False when the optimum search ran out of budget after truncation; the
  // optimal solution is then the best labeling seen.
  bool optimal_exact = true;
};

class InconsistentObservations : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

using Mask = std::uint8_t;

constexpr Mask bit(Sign s) noexcept { return static_cast<Mask>(1u << sign_rank(s)); }
constexpr Mask determinate_mask = bit(Sign::minus) | bit(Sign::zero) | bit(Sign::plus);
constexpr Mask full_mask = determinate_mask | bit(Sign::unknown);

constexpr Sign sign_of_rank(int r) noexcept { return all_signs[static_cast<std::size_t>(r)]; }

constexpr std::array<std::array<Mask, 6>, 16> effect_table = [] {
  std::array<std::array<Mask, 6>, 16> t{};
  for (int m = 0; m < 16; ++m)
    for (int k = 0; k < 6; ++k)
      for (int r = 0; r < 4; ++r)
        if (m & (1 << r)) t[m][k] |= bit(arc_effect(sign_of_rank(r), static_cast<ArcType>(k)));
  return t;
}();

inline Mask effect_mask(Mask domain, ArcType k) noexcept { return effect_table[domain][static_cast<int>(k)]; }

inline Sign single(Mask m) noexcept {
  for (int r = 0; r < 4; ++r)
    if (m == (1u << r)) return sign_of_rank(r);
  return Sign::unknown;
}

inline int popcount(Mask m) noexcept {
  int c = 0;
  for (; m; m &= static_cast<Mask>(m - 1)) ++c;
  return c;
}

// Index-based view of the item layer for the search.
class LabelingProblem {
 public:
  struct InGroup {
    int source;
    std::vector<ArcType> kinds;
  };

  LabelingProblem(const DependencyGraph& graph, const PartialLabeling& partial, WeightConvention convention) {
    for (const auto& item : graph.items()) names_.push_back(item.name);
    std::sort(names_.begin(), names_.end());
    names_.erase(std::unique(names_.begin(), names_.end()), names_.end());
    const int n = static_cast<int>(names_.size());
    std::map<std::string, int> index;
    for (int i = 0; i < n; ++i) index.emplace(names_[i], i);

    fixed_.assign(n, Sign::unknown);
    is_fixed_.assign(n, false);
    provenance_.assign(n, Provenance::guessed);
    for (const auto& [name, rec] : partial.labeled) {
      auto it = index.find(name);
      if (it == index.end() || !is_determinate(rec.sign)) continue;
      fixed_[it->second] = rec.sign;
      is_fixed_[it->second] = true;
      provenance_[it->second] = rec.provenance == Provenance::guessed ? Provenance::inferred : rec.provenance;
    }
    for (int i = 0; i < n; ++i)
      if (!is_fixed_[i]) guessed_.push_back(i);

    weight_.assign(n, 1);
    for (int i = 0; i < n; ++i) weight_[i] = arc_weight(provenance_[i], convention);

    groups_.assign(n, {});
    in_arcs_.assign(n, {});
    dependents_.assign(n, {});
    for (const auto& a : graph.arcs()) {
      if (a.layer != ArcLayer::item_to_item) continue;
      auto s = index.find(a.source), t = index.find(a.target);
      if (s == index.end() || t == index.end()) continue;
      in_arcs_[t->second].push_back({s->second, a.kind});
      auto& g = groups_[t->second];
      auto gi = std::find_if(g.begin(), g.end(), [&](const InGroup& x) { return x.source == s->second; });
      if (gi == g.end())
        g.push_back({s->second, {a.kind}});
      else
        gi->kinds.push_back(a.kind);
      auto& dep = dependents_[s->second];
      if (std::find(dep.begin(), dep.end(), t->second) == dep.end()) dep.push_back(t->second);
    }
  }

  int size() const noexcept { return static_cast<int>(names_.size()); }
  const std::vector<std::string>& names() const noexcept { return names_; }
  const std::vector<int>& guessed() const noexcept { return guessed_; }
  bool is_fixed(int i) const noexcept { return is_fixed_[i]; }
  Provenance provenance(int i) const noexcept { return provenance_[i]; }
  int weight(int i) const noexcept { return weight_[i]; }
  const std::vector<std::pair<int, ArcType>>& in_arcs(int i) const noexcept { return in_arcs_[i]; }

  std::vector<Mask> initial_domains() const {
    std::vector<Mask> d(names_.size(), full_mask);
    for (int i = 0; i < size(); ++i)
      if (is_fixed_[i]) d[i] = bit(fixed_[i]);
    return d;
  }

  // Values of `g` that still have support given the current domains.
  // `relaxed` admits `unknown` unconditionally (maximal partial labelings).
  Mask supported(int g, const std::vector<Mask>& d, bool relaxed) const {
    Mask produced = 0;
    bool can_be_silent = true;
    for (const auto& grp : groups_[g]) {
      const Mask dom = d[grp.source];
      bool silent = false;
      for (int r = 0; r < 4; ++r) {
        if (!(dom & (1u << r))) continue;
        Mask from_r = 0;
        for (ArcType k : grp.kinds) from_r |= effect_mask(static_cast<Mask>(1u << r), k);
        from_r &= determinate_mask;
        produced |= from_r;
        silent |= from_r == 0;
      }
      can_be_silent &= silent;
    }
    Mask allowed = produced;
    if (can_be_silent || relaxed) allowed |= bit(Sign::unknown);
    return allowed;
  }

  // Arc-consistency style fixpoint over guessed items. Returns false on a
  // wiped-out domain.
  bool propagate(std::vector<Mask>& d, bool relaxed, int changed = -1) const {
    std::vector<int> queue;
    std::vector<char> queued(names_.size(), 0);
    auto push = [&](int i) {
      if (!is_fixed_[i] && !queued[i]) {
        queued[i] = 1;
        queue.push_back(i);
      }
    };
    if (changed < 0) {
      for (int g : guessed_) push(g);
    } else {
      push(changed);
      for (int t : dependents_[changed]) push(t);
    }
    while (!queue.empty()) {
      int g = queue.back();
      queue.pop_back();
      queued[g] = 0;
      Mask nd = static_cast<Mask>(d[g] & supported(g, d, relaxed));
      if (nd == d[g]) continue;
      if (!nd) return false;
      d[g] = nd;
      for (int t : dependents_[g]) push(t);
    }
    return true;
  }

  // Exact consistency of a complete assignment.
  bool consistent(const std::vector<Sign>& a, bool relaxed) const {
    for (int g : guessed_) {
      Mask produced = 0;
      for (auto [s, k] : in_arcs_[g])
        if (Sign e = arc_effect(a[s], k); is_determinate(e)) produced |= bit(e);
      if (a[g] == Sign::unknown) {
        if (produced && !relaxed) return false;
      } else if (!(produced & bit(a[g]))) {
        return false;
      }
    }
    return true;
  }

  std::int64_t tally_for(int g, const std::vector<Sign>& a, Sign s) const {
    if (!is_determinate(s)) return 0;
    std::int64_t w = 0;
    for (auto [src, k] : in_arcs_[g])
      if (arc_effect(a[src], k) == s) w += weight_[src];
    return w;
  }

  // Largest weight `g` could collect by taking `v` under the current domains.
  std::int64_t optimistic_gain(int g, Sign v, const std::vector<Mask>& d) const {
    if (!is_determinate(v)) return 0;
    std::int64_t w = 0;
    for (auto [src, k] : in_arcs_[g])
      if (effect_mask(d[src], k) & bit(v)) w += weight_[src];
    return w;
  }

  // Optimistic objective over current domains; exact once all are singletons.
  std::int64_t objective_bound(const std::vector<Mask>& d) const {
    std::int64_t total = 0;
    for (int g : guessed_) {
      std::int64_t best = 0;
      for (Sign v : determinate_signs)
        if (d[g] & bit(v)) best = std::max(best, optimistic_gain(g, v, d));
      total += best;
    }
    return total;
  }

  Solution to_solution(const std::vector<Sign>& a) const {
    Solution s;
    // names_ is sorted, so every insertion goes at the end.
    for (int i = 0; i < size(); ++i) {
      s.labeling.emplace_hint(s.labeling.end(), names_[i], a[i]);
      s.provenance.emplace_hint(s.provenance.end(), names_[i], provenance_[i]);
    }
    for (int g : guessed_) {
      std::array<std::int64_t, 4> w{};
      for (auto [src, k] : in_arcs_[g])
        if (Sign e = arc_effect(a[src], k); is_determinate(e)) w[sign_rank(e)] += weight_[src];
      SupportTally t{names_[g], {}};
      for (int r = 1; r < 4; ++r)
        if (w[r]) t.weights.emplace_hint(t.weights.end(), sign_of_rank(r), w[r]);
      s.objective += w[sign_rank(a[g])];
      s.tallies.emplace_hint(s.tallies.end(), names_[g], std::move(t));
    }
    return s;
  }

  // Guessed items with the most outgoing arcs to other guessed items first:
  // fixing them tightens the objective bound fastest.
  std::vector<int> fan_out_order() const {
    std::vector<int> fan(names_.size(), 0);
    for (int t : guessed_)
      for (auto [src, k] : in_arcs_[t]) ++fan[src];
    std::vector<int> order = guessed_;
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return fan[a] > fan[b]; });
    return order;
  }

  // Guessed items in strongly-connected-component condensation order
  // (upstream components first), ascending index within a component.
  std::vector<int> scc_order() const {
    const int n = size();
    std::vector<int> idx(n, -1), low(n, 0), comp(n, -1);
    std::vector<char> on_stack(n, 0);
    std::vector<int> stack;
    std::vector<std::vector<int>> comps;
    int counter = 0;
    std::function<void(int)> strong = [&](int v) {
      idx[v] = low[v] = counter++;
      stack.push_back(v);
      on_stack[v] = 1;
      for (int w : dependents_[v]) {
        if (is_fixed_[w]) continue;
        if (idx[w] < 0) {
          strong(w);
          low[v] = std::min(low[v], low[w]);
        } else if (on_stack[w]) {
          low[v] = std::min(low[v], idx[w]);
        }
      }
      if (low[v] == idx[v]) {
        std::vector<int> c;
        int w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = 0;
          c.push_back(w);
        } while (w != v);
        std::sort(c.begin(), c.end());
        comps.push_back(std::move(c));
      }
    };
    for (int g : guessed_)
      if (idx[g] < 0) strong(g);
    std::vector<int> order;
    for (auto it = comps.rbegin(); it != comps.rend(); ++it) order.insert(order.end(), it->begin(), it->end());
    return order;
  }

 private:
  std::vector<std::string> names_;
  std::vector<Sign> fixed_;
  std::vector<bool> is_fixed_;
  std::vector<Provenance> provenance_;
  std::vector<int> guessed_;
  std::vector<int> weight_;
  std::vector<std::vector<InGroup>> groups_;
  std::vector<std::vector<std::pair<int, ArcType>>> in_arcs_;
  std::vector<std::vector<int>> dependents_;
};

// Depth-first enumeration with propagation. `keep` may prune a node given
// its domains; `emit` receives complete assignments and returns false to stop.
class LabelingSearch {
 public:
  // `greedy` tries the values with the largest optimistic gain first;
  // otherwise values go in canonical order, so solutions come out sorted.
  LabelingSearch(const LabelingProblem& p, bool relaxed, std::vector<int> order, bool greedy = false)
      : p_(p), relaxed_(relaxed), greedy_(greedy), order_(std::move(order)) {}

  template <typename Keep, typename Emit>
  void run(Keep&& keep, Emit&& emit) {
    auto d = p_.initial_domains();
    if (!p_.propagate(d, relaxed_)) return;
    stopped_ = false;
    dfs(0, d, keep, emit);
  }

  std::uint64_t nodes() const noexcept { return nodes_; }

 private:
  template <typename Keep, typename Emit>
  void dfs(std::size_t level, std::vector<Mask>& d, Keep& keep, Emit& emit) {
    ++nodes_;
    if (stopped_ || !keep(d)) return;
    if (level == order_.size()) {
      std::vector<Sign> a(d.size());
      for (std::size_t i = 0; i < d.size(); ++i) a[i] = single(d[i]);
      if (p_.consistent(a, relaxed_) && !emit(a)) stopped_ = true;
      return;
    }
    const int var = order_[level];
    std::array<int, 4> ranks{0, 1, 2, 3};
    if (greedy_) {
      std::array<std::int64_t, 4> gain{};
      for (int r = 0; r < 4; ++r) gain[r] = p_.optimistic_gain(var, sign_of_rank(r), d);
      std::stable_sort(ranks.begin(), ranks.end(), [&](int a, int b) { return gain[a] > gain[b]; });
    }
    for (int r : ranks) {
      if (stopped_) break;
      if (!(d[var] & (1u << r))) continue;
      std::vector<Mask> next = d;
      next[var] = static_cast<Mask>(1u << r);
      if (p_.propagate(next, relaxed_, var)) dfs(level + 1, next, keep, emit);
    }
  }

  const LabelingProblem& p_;
  bool relaxed_;
  bool greedy_;
  std::vector<int> order_;
  bool stopped_ = false;
  std::uint64_t nodes_ = 0;
};

inline std::vector<Solution> collect(const LabelingProblem& p, std::vector<std::vector<Sign>> found) {
  std::sort(found.begin(), found.end(), [](const auto& a, const auto& b) {
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end(),
                                        [](Sign x, Sign y) { return sign_rank(x) < sign_rank(y); });
  });
  std::vector<Solution> out;
  out.reserve(found.size());
  for (const auto& a : found) out.push_back(p.to_solution(a));
  return out;
}

inline std::vector<int> index_order(const LabelingProblem& p) { return p.guessed(); }

}  // namespace detail

// Every consistent completion of `partial`, in canonical order, up to
// config.cap solutions.
inline std::vector<Solution> enumerate_solutions(const DependencyGraph& graph, const PartialLabeling& partial,
                                                 const PredictionConfig& config = {}, bool* truncated = nullptr) {
  detail::LabelingProblem p(graph, partial, config.weights);
  detail::LabelingSearch search(p, false, p.scc_order());
  std::vector<std::vector<Sign>> found;
  bool hit_cap = false;
  search.run([](const auto&) { return true; },
             [&](const std::vector<Sign>& a) {
               if (found.size() >= config.cap) {
                 hit_cap = true;
                 return false;
               }
               found.push_back(a);
               return true;
             });
  if (truncated) *truncated = hit_cap;
  return detail::collect(p, std::move(found));
}

// Labelings where guessed items may stay unknown, restricted to those that
// label the most items.
inline std::vector<Solution> maximal_partial_fallback(const DependencyGraph& graph, const PartialLabeling& partial,
                                                      const PredictionConfig& config = {},
                                                      bool* truncated = nullptr) {
  detail::LabelingProblem p(graph, partial, config.weights);
  auto labeled_bound = [&](const std::vector<detail::Mask>& d) {
    int count = 0;
    for (auto m : d)
      if (m & detail::determinate_mask) ++count;
    return count;
  };
  auto labeled_count = [](const std::vector<Sign>& a) {
    return static_cast<int>(std::count_if(a.begin(), a.end(), [](Sign s) { return is_determinate(s); }));
  };

  int best = -1;
  {
    // Determinate values first so good labelings are found early.
    detail::LabelingSearch probe(p, true, detail::index_order(p));
    probe.run([&](const auto& d) { return labeled_bound(d) > best; },
              [&](const std::vector<Sign>& a) {
                best = std::max(best, labeled_count(a));
                return true;
              });
  }
  std::vector<std::vector<Sign>> found;
  bool hit_cap = false;
  detail::LabelingSearch search(p, true, p.scc_order());
  search.run([&](const auto& d) { return labeled_bound(d) >= best; },
             [&](const std::vector<Sign>& a) {
               if (labeled_count(a) != best) return true;
               if (found.size() >= config.cap) {
                 hit_cap = true;
                 return false;
               }
               found.push_back(a);
               return true;
             });
  if (truncated) *truncated = hit_cap;
  return detail::collect(p, std::move(found));
}

inline std::map<std::string, Sign> robust_signs(std::span<const Solution> solutions) {
  if (solutions.empty()) throw InconsistentObservations("no consistent labeling exists for the observations");
  std::map<std::string, Sign> robust;
  for (const auto& [item, s] : solutions.front().labeling)
    if (is_determinate(s)) robust.emplace(item, s);
  for (const auto& sol : solutions.subspan(1)) {
    for (auto it = robust.begin(); it != robust.end();) {
      auto jt = sol.labeling.find(it->first);
      if (jt == sol.labeling.end() || jt->second != it->second)
        it = robust.erase(it);
      else
        ++it;
    }
  }
  return robust;
}

// Maximal objective; ties go to the canonically smallest labeling.
inline Solution optimal_solution(std::span<const Solution> solutions) {
  if (solutions.empty()) throw InconsistentObservations("no solution to optimize over");
  const Solution* best = &solutions.front();
  for (const auto& s : solutions.subspan(1))
    if (s.objective > best->objective || (s.objective == best->objective && labeling_less(s, *best))) best = &s;
  return *best;
}

struct OptimizeOutcome {
  std::optional<Solution> best;  // best labeling found with objective >= at_least
  bool proven = false;           // the objective is the global maximum
  bool canonical = false;        // and the labeling is the smallest reaching it
};

// Branch-and-bound over the full solution space: a greedy pass finds and
// proves the best objective, a canonical pass then finds the smallest
// labeling reaching it. `at_least` is an objective already known to be
// reachable. Both passes share config.optimize_node_limit.
inline OptimizeOutcome optimize_solution(const DependencyGraph& graph, const PartialLabeling& partial,
                                         const PredictionConfig& config = {}, std::int64_t at_least = 0) {
  detail::LabelingProblem p(graph, partial, config.weights);
  OptimizeOutcome out;
  std::optional<std::vector<Sign>> incumbent;
  std::int64_t best_value = at_least;
  bool exhausted = false;

  detail::LabelingSearch greedy(p, false, p.fan_out_order(), true);
  greedy.run(
      [&](const auto& d) {
        if (greedy.nodes() > config.optimize_node_limit) {
          exhausted = true;
          return false;
        }
        auto bound = p.objective_bound(d);
        return incumbent ? bound > best_value : bound >= best_value;
      },
      [&](const std::vector<Sign>& a) {
        auto value = p.to_solution(a).objective;
        if (incumbent ? value > best_value : value >= best_value) {
          best_value = value;
          incumbent = a;
        }
        return true;
      });
  if (!incumbent) return out;
  out.best = p.to_solution(*incumbent);
  if (exhausted) return out;
  out.proven = true;

  const std::uint64_t left = config.optimize_node_limit - std::min(config.optimize_node_limit, greedy.nodes());
  detail::LabelingSearch canonical(p, false, detail::index_order(p));
  canonical.run(
      [&](const auto& d) {
        if (canonical.nodes() > left) {
          exhausted = true;
          return false;
        }
        return p.objective_bound(d) >= best_value;
      },
      [&](const std::vector<Sign>& a) {
        auto sol = p.to_solution(a);
        if (sol.objective != best_value) return true;
        out.best = std::move(sol);
        out.canonical = true;
        return false;
      });
  return out;
}

inline PredictionResult predict(const DependencyGraph& graph, const PartialLabeling& partial,
                                const PredictionConfig& config = {}) {
  PredictionResult r;
  r.all_solutions = enumerate_solutions(graph, partial, config, &r.truncated);
  if (r.all_solutions.empty()) {
    r.fallback = true;
    r.all_solutions = maximal_partial_fallback(graph, partial, config, &r.truncated);
  }
  r.robust = robust_signs(r.all_solutions);
  r.approximate = r.truncated;
  r.optimal = optimal_solution(r.all_solutions);
  if (r.truncated && !r.fallback) {
    auto better = optimize_solution(graph, partial, config, r.optimal.objective);
    if (better.canonical || (better.best && better.best->objective > r.optimal.objective))
      r.optimal = std::move(*better.best);
    r.optimal_exact = better.canonical;
  }
  return r;
}

// ilab/2 for robust signs, count_infl/3 and sol_label/3 for the optimal
// solution.
inline FactBase prediction_facts(const PredictionResult& r, std::optional<int> hour = std::nullopt) {
  FactBase out;
  if (hour) out.add("hour", {Term::integer(*hour)});
  for (const auto& [item, s] : r.robust) out.add("ilab", {Term::sym(item), sign_term(s)});
  for (const auto& [item, tally] : r.optimal.tallies)
    for (const auto& [s, w] : tally.weights) out.add("count_infl", {Term::sym(item), sign_term(s), Term::integer(w)});
  for (const auto& [item, s] : r.optimal.labeling) {
    auto prov = r.optimal.provenance.at(item);
    out.add("sol_label", {Term::sym(item), sign_term(s), Term::sym(std::string(to_string(prov)))});
  }
  return out;
}

}  // namespace qhealth
