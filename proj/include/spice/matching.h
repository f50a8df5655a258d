#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

namespace spice {

// Endpoint of an added edge: either a prior node (pre-matched to itself,
// `key` is its id) or an added node (`key` indexes the side's added nodes).
struct EdgeEnd {
  bool added = false;
  std::uint64_t key = 0;

  friend auto operator<=>(const EdgeEnd&, const EdgeEnd&) = default;
};

struct EdgeSpec {
  EdgeEnd source;
  EdgeEnd target;
};

// Costs for pairing the added portions of a predicted and a reference graph.
// A missing pair cost means the two entities may never be paired. Edges
// are only pairable when both of their endpoints correspond.
struct PairingProblem {
  std::vector<std::vector<std::optional<double>>> node_cost;  // [pred][ref]
  std::vector<double> pred_node_unmatched;
  std::vector<double> ref_node_unmatched;

  std::vector<EdgeSpec> pred_edges;
  std::vector<EdgeSpec> ref_edges;
  std::vector<std::vector<std::optional<double>>> edge_cost;  // [pred][ref]
  std::vector<double> pred_edge_unmatched;
  std::vector<double> ref_edge_unmatched;

  std::size_t pred_nodes() const { return pred_node_unmatched.size(); }
  std::size_t ref_nodes() const { return ref_node_unmatched.size(); }
};

struct MatchPlan {
  std::vector<std::pair<std::size_t, std::size_t>> node_pairs;  // (pred, ref)
  std::vector<std::pair<std::size_t, std::size_t>> edge_pairs;
  std::vector<std::size_t> unmatched_pred_nodes;
  std::vector<std::size_t> unmatched_ref_nodes;
  std::vector<std::size_t> unmatched_pred_edges;
  std::vector<std::size_t> unmatched_ref_edges;
  double cost = 0;
  bool approximate = false;
};

inline constexpr std::size_t kDefaultPairingCap = 8;

// Minimum-cost pairing. Exhaustive over all partial injective node
// pairings (edge pairings derived per node pairing) while
// max(pred nodes, ref nodes) <= cap; greedy best-first beyond that, with
// the plan marked approximate. Ties between optimal plans are broken by
// their sorted cost components, so the result does not depend on the order
// entities are listed in, and `cost` is the sum of those sorted components.
MatchPlan optimal_pairing(const PairingProblem& problem,
                          std::size_t cap = kDefaultPairingCap);

// Total cost of `node_pairs` with edges paired optimally under them.
// Exposed for tests and diagnostics.
double evaluate_node_pairing(
    const PairingProblem& problem,
    const std::vector<std::pair<std::size_t, std::size_t>>& node_pairs);

}  // namespace spice
