#pragma once

// Graph-level GED by enumerating every partial injection between the added
// nodes of the two graphs. With exact matching, an added predicted edge
// pairs iff its image under the node mapping is an added reference edge, so
// no edge search is needed.

#include <limits>
#include <map>
#include <optional>

#include "pairing_oracle.h"
#include "spice/metrics.h"
#include "spice/scene_graph.h"

namespace spice::testing {

inline double brute_force_ged(const SceneGraph& predicted, const SceneGraph& reference,
                              const SceneGraph& prior, MetricMode mode) {
  const bool hard = mode == MetricMode::kHard;
  std::vector<NodeId> pred_new, ref_new;
  for (const auto& [id, node] : predicted.nodes())
    if (!prior.contains(id)) pred_new.push_back(id);
  for (const auto& [id, node] : reference.nodes())
    if (!prior.contains(id)) ref_new.push_back(id);

  auto attribute_cost = [&](const Node& p, const Node& r) {
    double cost = 0;
    for (const auto& a : r.attributes)
      if (!p.attributes.count(a)) cost += 0.25;
    if (hard)
      for (const auto& a : p.attributes)
        if (!r.attributes.count(a)) cost += 0.25;
    return cost;
  };

  double prior_cost = 0;
  for (const auto& [id, node] : prior.nodes())
    prior_cost += attribute_cost(*predicted.find(id), *reference.find(id));

  std::vector<Edge> pred_edges, ref_edges;
  for (const auto& e : predicted.edges())
    if (!prior.edges().count(e)) pred_edges.push_back(e);
  for (const auto& e : reference.edges())
    if (!prior.edges().count(e)) ref_edges.push_back(e);

  double best = std::numeric_limits<double>::infinity();
  for (const auto& pairs : partial_injections(pred_new.size(), ref_new.size())) {
    std::map<NodeId, NodeId> image;
    for (const auto& [id, node] : prior.nodes()) image[id] = id;
    double cost = prior_cost;
    bool ok = true;
    for (auto [i, j] : pairs) {
      const Node& p = *predicted.find(pred_new[i]);
      const Node& r = *reference.find(ref_new[j]);
      if (p.name != r.name) {
        ok = false;
        break;
      }
      image[p.id] = r.id;
      cost += attribute_cost(p, r);
    }
    if (!ok) continue;
    cost += double(ref_new.size() - pairs.size());
    if (hard) cost += double(pred_new.size() - pairs.size());

    std::size_t matched_edges = 0;
    for (const auto& e : pred_edges) {
      auto s = image.find(e.source);
      auto t = image.find(e.target);
      if (s == image.end() || t == image.end()) continue;
      const Edge mapped{s->second, t->second, e.predicate};
      for (const auto& r : ref_edges) matched_edges += (r == mapped);
    }
    cost += double(ref_edges.size() - matched_edges);
    if (hard) cost += double(pred_edges.size() - matched_edges);
    best = std::min(best, cost);
  }
  return best;
}

}  // namespace spice::testing
