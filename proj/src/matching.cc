#include "spice/matching.h"

#include <algorithm>
#include <limits>
#include <map>
#include <numeric>
#include <tuple>

namespace spice {

namespace {

constexpr double kTieTolerance = 1e-9;
constexpr double kInf = std::numeric_limits<double>::infinity();
// Edge groups beyond this size are paired greedily.
constexpr std::size_t kEdgeGroupCap = 6;

using Pairs = std::vector<std::pair<std::size_t, std::size_t>>;
using EndPair = std::pair<EdgeEnd, EdgeEnd>;

double sorted_sum(std::vector<double>& components) {
  std::sort(components.begin(), components.end());
  return std::accumulate(components.begin(), components.end(), 0.0);
}

// True when `a` should replace the incumbent `b` among equal-cost plans.
bool prefer(const std::vector<double>& a, const std::vector<double>& b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

// Minimum-cost partial assignment between a handful of rows and columns.
struct SmallSolution {
  Pairs pairs;  // (row position, col position)
  double cost = 0;
  std::vector<double> components;  // sorted
};

template <typename CostFn>
SmallSolution solve_small(std::size_t rows, std::size_t cols, CostFn cost,
                          const std::vector<double>& row_unmatched,
                          const std::vector<double>& col_unmatched) {
  SmallSolution best;
  best.cost = kInf;

  auto components_of = [&](const Pairs& pairs) {
    std::vector<double> out;
    std::vector<bool> row_used(rows, false), col_used(cols, false);
    for (auto [r, c] : pairs) {
      out.push_back(*cost(r, c));
      row_used[r] = col_used[c] = true;
    }
    for (std::size_t r = 0; r < rows; ++r)
      if (!row_used[r]) out.push_back(row_unmatched[r]);
    for (std::size_t c = 0; c < cols; ++c)
      if (!col_used[c]) out.push_back(col_unmatched[c]);
    std::sort(out.begin(), out.end());
    return out;
  };

  auto consider = [&](const Pairs& pairs, double total) {
    if (total < best.cost - kTieTolerance) {
      best.pairs = pairs;
      best.components = components_of(pairs);
      best.cost = total;
    } else if (total <= best.cost + kTieTolerance) {
      auto components = components_of(pairs);
      if (prefer(components, best.components)) {
        best.pairs = pairs;
        best.components = std::move(components);
        best.cost = std::min(best.cost, total);
      }
    }
  };

  if (rows > kEdgeGroupCap || cols > kEdgeGroupCap) {
    std::vector<std::tuple<double, std::size_t, std::size_t>> candidates;
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < cols; ++c) {
        if (auto v = cost(r, c)) {
          const double gain = *v - row_unmatched[r] - col_unmatched[c];
          if (gain <= 0) candidates.emplace_back(gain, r, c);
        }
      }
    }
    std::sort(candidates.begin(), candidates.end());
    std::vector<bool> row_used(rows, false), col_used(cols, false);
    Pairs pairs;
    for (auto [gain, r, c] : candidates) {
      if (row_used[r] || col_used[c]) continue;
      row_used[r] = col_used[c] = true;
      pairs.emplace_back(r, c);
    }
    best.pairs = pairs;
    best.components = components_of(pairs);
    best.cost = std::accumulate(best.components.begin(), best.components.end(), 0.0);
    return best;
  }

  std::vector<bool> row_used(rows, false);
  Pairs pairs;
  auto dfs = [&](auto&& self, std::size_t c, double partial) -> void {
    if (partial > best.cost + kTieTolerance) return;
    if (c == cols) {
      double total = partial;
      for (std::size_t r = 0; r < rows; ++r)
        if (!row_used[r]) total += row_unmatched[r];
      consider(pairs, total);
      return;
    }
    for (std::size_t r = 0; r < rows; ++r) {
      if (row_used[r]) continue;
      auto v = cost(r, c);
      if (!v) continue;
      row_used[r] = true;
      pairs.emplace_back(r, c);
      self(self, c + 1, partial + *v);
      pairs.pop_back();
      row_used[r] = false;
    }
    self(self, c + 1, partial + col_unmatched[c]);
  };
  dfs(dfs, 0, 0.0);
  return best;
}

// Pairs edges optimally for a fixed node correspondence.
class EdgePairer {
 public:
  explicit EdgePairer(const PairingProblem& problem) : problem_(problem) {
    for (std::size_t e = 0; e < problem.ref_edges.size(); ++e) {
      const auto& spec = problem.ref_edges[e];
      ref_groups_[{spec.source, spec.target}].push_back(e);
    }
  }

  struct Result {
    double cost = 0;
    std::vector<double> components;  // unsorted
    Pairs pairs;
    std::vector<std::size_t> unmatched_pred;
    std::vector<std::size_t> unmatched_ref;
  };

  Result pair(const std::vector<std::optional<std::size_t>>& pred_to_ref,
              bool detailed) const {
    Result result;
    std::map<EndPair, std::vector<std::size_t>> pred_groups;
    for (std::size_t e = 0; e < problem_.pred_edges.size(); ++e) {
      const auto source = map_end(problem_.pred_edges[e].source, pred_to_ref);
      const auto target = map_end(problem_.pred_edges[e].target, pred_to_ref);
      if (source && target && ref_groups_.count({*source, *target})) {
        pred_groups[{*source, *target}].push_back(e);
      } else {
        add_unmatched_pred(result, e, detailed);
      }
    }
    for (const auto& [key, refs] : ref_groups_) {
      auto it = pred_groups.find(key);
      if (it == pred_groups.end()) {
        for (std::size_t r : refs) add_unmatched_ref(result, r, detailed);
        continue;
      }
      const auto& preds = it->second;
      std::vector<double> pred_unmatched, ref_unmatched;
      for (std::size_t p : preds) pred_unmatched.push_back(problem_.pred_edge_unmatched[p]);
      for (std::size_t r : refs) ref_unmatched.push_back(problem_.ref_edge_unmatched[r]);
      const SmallSolution solution = solve_small(
          preds.size(), refs.size(),
          [&](std::size_t i, std::size_t j) { return problem_.edge_cost[preds[i]][refs[j]]; },
          pred_unmatched, ref_unmatched);
      result.cost += solution.cost;
      if (!detailed) continue;
      result.components.insert(result.components.end(), solution.components.begin(),
                               solution.components.end());
      std::vector<bool> pred_used(preds.size(), false), ref_used(refs.size(), false);
      for (auto [i, j] : solution.pairs) {
        result.pairs.emplace_back(preds[i], refs[j]);
        pred_used[i] = ref_used[j] = true;
      }
      for (std::size_t i = 0; i < preds.size(); ++i)
        if (!pred_used[i]) result.unmatched_pred.push_back(preds[i]);
      for (std::size_t j = 0; j < refs.size(); ++j)
        if (!ref_used[j]) result.unmatched_ref.push_back(refs[j]);
    }
    return result;
  }

 private:
  static std::optional<EdgeEnd> map_end(
      const EdgeEnd& end, const std::vector<std::optional<std::size_t>>& pred_to_ref) {
    if (!end.added) return end;
    const auto& mapped = pred_to_ref[end.key];
    if (!mapped) return std::nullopt;
    return EdgeEnd{true, *mapped};
  }

  void add_unmatched_pred(Result& result, std::size_t e, bool detailed) const {
    result.cost += problem_.pred_edge_unmatched[e];
    if (!detailed) return;
    result.components.push_back(problem_.pred_edge_unmatched[e]);
    result.unmatched_pred.push_back(e);
  }

  void add_unmatched_ref(Result& result, std::size_t e, bool detailed) const {
    result.cost += problem_.ref_edge_unmatched[e];
    if (!detailed) return;
    result.components.push_back(problem_.ref_edge_unmatched[e]);
    result.unmatched_ref.push_back(e);
  }

  const PairingProblem& problem_;
  std::map<EndPair, std::vector<std::size_t>> ref_groups_;
};

class NodeSearch {
 public:
  explicit NodeSearch(const PairingProblem& problem)
      : problem_(problem),
        edges_(problem),
        pred_to_ref_(problem.pred_nodes()),
        ref_to_pred_(problem.ref_nodes()) {
    // Every remaining reference node costs at least its cheapest option.
    suffix_bound_.assign(problem.ref_nodes() + 1, 0.0);
    for (std::size_t j = problem.ref_nodes(); j-- > 0;) {
      double cheapest = problem.ref_node_unmatched[j];
      for (std::size_t i = 0; i < problem.pred_nodes(); ++i) {
        if (auto v = problem.node_cost[i][j]) cheapest = std::min(cheapest, *v);
      }
      suffix_bound_[j] = suffix_bound_[j + 1] + cheapest;
    }
  }

  void run() { dfs(0, 0.0); }

  const std::vector<std::optional<std::size_t>>& best_mapping() const {
    return best_pred_to_ref_;
  }

 private:
  void dfs(std::size_t j, double partial) {
    if (partial + suffix_bound_[j] > best_ + kTieTolerance) return;
    if (j == problem_.ref_nodes()) {
      leaf(partial);
      return;
    }
    for (std::size_t i = 0; i < problem_.pred_nodes(); ++i) {
      if (pred_to_ref_[i]) continue;
      auto v = problem_.node_cost[i][j];
      if (!v) continue;
      pred_to_ref_[i] = j;
      ref_to_pred_[j] = i;
      dfs(j + 1, partial + *v);
      pred_to_ref_[i].reset();
      ref_to_pred_[j].reset();
    }
    dfs(j + 1, partial + problem_.ref_node_unmatched[j]);
  }

  void leaf(double partial) {
    double total = partial;
    for (std::size_t i = 0; i < problem_.pred_nodes(); ++i)
      if (!pred_to_ref_[i]) total += problem_.pred_node_unmatched[i];
    if (total > best_ + kTieTolerance) return;
    total += edges_.pair(pred_to_ref_, false).cost;
    if (total < best_ - kTieTolerance) {
      best_ = total;
      best_pred_to_ref_ = pred_to_ref_;
      best_components_.reset();
    } else if (total <= best_ + kTieTolerance) {
      if (!best_components_) best_components_ = components(best_pred_to_ref_);
      auto mine = components(pred_to_ref_);
      if (prefer(mine, *best_components_)) {
        best_ = std::min(best_, total);
        best_pred_to_ref_ = pred_to_ref_;
        best_components_ = std::move(mine);
      }
    }
  }

  std::vector<double> components(
      const std::vector<std::optional<std::size_t>>& pred_to_ref) const {
    std::vector<double> out;
    std::vector<bool> ref_used(problem_.ref_nodes(), false);
    for (std::size_t i = 0; i < pred_to_ref.size(); ++i) {
      if (pred_to_ref[i]) {
        out.push_back(*problem_.node_cost[i][*pred_to_ref[i]]);
        ref_used[*pred_to_ref[i]] = true;
      } else {
        out.push_back(problem_.pred_node_unmatched[i]);
      }
    }
    for (std::size_t j = 0; j < ref_used.size(); ++j)
      if (!ref_used[j]) out.push_back(problem_.ref_node_unmatched[j]);
    auto edge_part = edges_.pair(pred_to_ref, true).components;
    out.insert(out.end(), edge_part.begin(), edge_part.end());
    std::sort(out.begin(), out.end());
    return out;
  }

  const PairingProblem& problem_;
  EdgePairer edges_;
  std::vector<std::optional<std::size_t>> pred_to_ref_;
  std::vector<std::optional<std::size_t>> ref_to_pred_;
  std::vector<double> suffix_bound_;
  double best_ = kInf;
  std::vector<std::optional<std::size_t>> best_pred_to_ref_;
  std::optional<std::vector<double>> best_components_;
};

std::vector<std::optional<std::size_t>> greedy_mapping(const PairingProblem& problem) {
  std::vector<std::tuple<double, double, std::size_t, std::size_t>> candidates;
  for (std::size_t i = 0; i < problem.pred_nodes(); ++i) {
    for (std::size_t j = 0; j < problem.ref_nodes(); ++j) {
      if (auto v = problem.node_cost[i][j]) {
        const double gain =
            *v - problem.pred_node_unmatched[i] - problem.ref_node_unmatched[j];
        if (gain <= 0) candidates.emplace_back(gain, *v, i, j);
      }
    }
  }
  std::sort(candidates.begin(), candidates.end());
  std::vector<std::optional<std::size_t>> pred_to_ref(problem.pred_nodes());
  std::vector<bool> ref_used(problem.ref_nodes(), false);
  for (const auto& [gain, cost, i, j] : candidates) {
    if (pred_to_ref[i] || ref_used[j]) continue;
    pred_to_ref[i] = j;
    ref_used[j] = true;
  }
  return pred_to_ref;
}

MatchPlan build_plan(const PairingProblem& problem,
                     const std::vector<std::optional<std::size_t>>& pred_to_ref) {
  MatchPlan plan;
  std::vector<double> components;
  std::vector<bool> ref_used(problem.ref_nodes(), false);
  for (std::size_t i = 0; i < pred_to_ref.size(); ++i) {
    if (pred_to_ref[i]) {
      plan.node_pairs.emplace_back(i, *pred_to_ref[i]);
      components.push_back(*problem.node_cost[i][*pred_to_ref[i]]);
      ref_used[*pred_to_ref[i]] = true;
    } else {
      plan.unmatched_pred_nodes.push_back(i);
      components.push_back(problem.pred_node_unmatched[i]);
    }
  }
  for (std::size_t j = 0; j < ref_used.size(); ++j) {
    if (ref_used[j]) continue;
    plan.unmatched_ref_nodes.push_back(j);
    components.push_back(problem.ref_node_unmatched[j]);
  }
  auto edges = EdgePairer(problem).pair(pred_to_ref, true);
  components.insert(components.end(), edges.components.begin(), edges.components.end());
  plan.edge_pairs = std::move(edges.pairs);
  plan.unmatched_pred_edges = std::move(edges.unmatched_pred);
  plan.unmatched_ref_edges = std::move(edges.unmatched_ref);
  std::sort(plan.edge_pairs.begin(), plan.edge_pairs.end());
  std::sort(plan.unmatched_pred_edges.begin(), plan.unmatched_pred_edges.end());
  std::sort(plan.unmatched_ref_edges.begin(), plan.unmatched_ref_edges.end());
  plan.cost = sorted_sum(components);
  return plan;
}

}  // namespace

MatchPlan optimal_pairing(const PairingProblem& problem, std::size_t cap) {
  if (std::max(problem.pred_nodes(), problem.ref_nodes()) > cap) {
    MatchPlan plan = build_plan(problem, greedy_mapping(problem));
    plan.approximate = true;
    return plan;
  }
  NodeSearch search(problem);
  search.run();
  return build_plan(problem, search.best_mapping());
}

double evaluate_node_pairing(const PairingProblem& problem, const Pairs& node_pairs) {
  std::vector<std::optional<std::size_t>> pred_to_ref(problem.pred_nodes());
  for (auto [i, j] : node_pairs) pred_to_ref[i] = j;
  return build_plan(problem, pred_to_ref).cost;
}

}  // namespace spice
