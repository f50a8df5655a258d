#include "spice/metrics.h"

#include <algorithm>
#include <numeric>

#include "spice/errors.h"

namespace spice {

namespace {

// The added-since-prior portion of one graph.
struct AddedPortion {
  std::vector<const Node*> nodes;
  std::map<NodeId, std::size_t> index;
  std::vector<const Edge*> edges;
  std::vector<EdgeSpec> specs;
};

AddedPortion added_portion(const SceneGraph& graph, const SceneGraph& prior) {
  AddedPortion out;
  for (const auto& [id, node] : graph.nodes()) {
    if (prior.contains(id)) continue;
    out.index[id] = out.nodes.size();
    out.nodes.push_back(&node);
  }
  auto end_of = [&](NodeId id) {
    return prior.contains(id) ? EdgeEnd{false, id.value} : EdgeEnd{true, out.index.at(id)};
  };
  for (const auto& edge : graph.edges()) {
    if (prior.edges().count(edge)) continue;
    out.edges.push_back(&edge);
    out.specs.push_back(EdgeSpec{end_of(edge.source), end_of(edge.target)});
  }
  return out;
}

std::size_t count_missing(const std::set<std::string>& want, const std::set<std::string>& have) {
  std::size_t n = 0;
  for (const auto& a : want) n += have.count(a) == 0;
  return n;
}

double sorted_sum(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  return std::accumulate(values.begin(), values.end(), 0.0);
}

double unmatched_pred_cost(MetricMode mode) { return mode == MetricMode::kHard ? 1.0 : 0.0; }

void check_inputs(const SceneGraph& predicted, const SceneGraph& reference,
                  const SceneGraph& prior) {
  require_additive_superset(prior, predicted, "predicted context does not extend prior");
  require_additive_superset(prior, reference, "reference context does not extend prior");
}

std::string phrase_of(const Node& node, const std::set<std::string>* keep) {
  std::string out;
  for (const auto& attribute : node.attributes) {
    if (keep != nullptr && keep->count(attribute) == 0) continue;
    out += attribute;
    out += ' ';
  }
  return out + node.name;
}

// Dissimilarity between a predicted and a reference node. Soft mode does
// not charge predicted-only attributes: it takes the better of the full
// phrase and the phrase restricted to attributes the reference also has.
double node_dissimilarity(const Node& pred, const Node& ref, MetricMode mode,
                          const SimilarityProvider& provider) {
  const std::string ref_phrase = phrase_of(ref, nullptr);
  const double hard = 1.0 - provider.similarity(phrase_of(pred, nullptr), ref_phrase);
  if (mode == MetricMode::kHard) return hard;
  return std::min(hard, 1.0 - provider.similarity(phrase_of(pred, &ref.attributes), ref_phrase));
}

std::string edge_phrase(const Node& source, const std::string& predicate, const Node& target,
                        const Node* ref_source, const Node* ref_target) {
  return phrase_of(source, ref_source ? &ref_source->attributes : nullptr) + " " + predicate +
         " " + phrase_of(target, ref_target ? &ref_target->attributes : nullptr);
}

double edge_dissimilarity(const SceneGraph& predicted, const Edge& pred,
                          const SceneGraph& reference, const Edge& ref, MetricMode mode,
                          const SimilarityProvider& provider) {
  const Node& ps = *predicted.find(pred.source);
  const Node& pt = *predicted.find(pred.target);
  const Node& rs = *reference.find(ref.source);
  const Node& rt = *reference.find(ref.target);
  const std::string ref_phrase = edge_phrase(rs, ref.predicate, rt, nullptr, nullptr);
  const double hard =
      1.0 - provider.similarity(edge_phrase(ps, pred.predicate, pt, nullptr, nullptr), ref_phrase);
  if (mode == MetricMode::kHard) return hard;
  return std::min(
      hard, 1.0 - provider.similarity(edge_phrase(ps, pred.predicate, pt, &rs, &rt), ref_phrase));
}

MatchCounts plan_counts(const MatchPlan& plan) {
  MatchCounts counts;
  counts.matched_nodes = plan.node_pairs.size();
  counts.missing_nodes = plan.unmatched_ref_nodes.size();
  counts.extra_nodes = plan.unmatched_pred_nodes.size();
  counts.matched_edges = plan.edge_pairs.size();
  counts.missing_edges = plan.unmatched_ref_edges.size();
  counts.extra_edges = plan.unmatched_pred_edges.size();
  return counts;
}

void add_attribute_counts(MatchCounts& counts, const Node& pred, const Node& ref,
                          const Node* prior) {
  for (const auto& a : pred.attributes) {
    if (ref.attributes.count(a) && !(prior && prior->attributes.count(a))) {
      ++counts.matched_attributes;
    }
  }
  counts.missing_attributes += count_missing(ref.attributes, pred.attributes);
  counts.extra_attributes += count_missing(pred.attributes, ref.attributes);
}

}  // namespace

std::string node_phrase(const Node& node) { return phrase_of(node, nullptr); }

PairingProblem ged_problem(const SceneGraph& predicted, const SceneGraph& reference,
                           const SceneGraph& prior, MetricMode mode, double* fixed_cost) {
  check_inputs(predicted, reference, prior);
  const AddedPortion pred = added_portion(predicted, prior);
  const AddedPortion ref = added_portion(reference, prior);
  const double extra_weight = mode == MetricMode::kHard ? kAttributePenalty : 0.0;

  auto attribute_cost = [&](const Node& p, const Node& r) {
    return kAttributePenalty * count_missing(r.attributes, p.attributes) +
           extra_weight * count_missing(p.attributes, r.attributes);
  };

  PairingProblem problem;
  problem.node_cost.assign(pred.nodes.size(),
                           std::vector<std::optional<double>>(ref.nodes.size()));
  for (std::size_t i = 0; i < pred.nodes.size(); ++i) {
    for (std::size_t j = 0; j < ref.nodes.size(); ++j) {
      if (pred.nodes[i]->name == ref.nodes[j]->name) {
        problem.node_cost[i][j] = attribute_cost(*pred.nodes[i], *ref.nodes[j]);
      }
    }
  }
  problem.pred_node_unmatched.assign(pred.nodes.size(), unmatched_pred_cost(mode));
  problem.ref_node_unmatched.assign(ref.nodes.size(), 1.0);

  problem.pred_edges = pred.specs;
  problem.ref_edges = ref.specs;
  problem.edge_cost.assign(pred.edges.size(),
                           std::vector<std::optional<double>>(ref.edges.size()));
  for (std::size_t i = 0; i < pred.edges.size(); ++i) {
    for (std::size_t j = 0; j < ref.edges.size(); ++j) {
      if (pred.edges[i]->predicate == ref.edges[j]->predicate) problem.edge_cost[i][j] = 0.0;
    }
  }
  problem.pred_edge_unmatched.assign(pred.edges.size(), unmatched_pred_cost(mode));
  problem.ref_edge_unmatched.assign(ref.edges.size(), 1.0);

  if (fixed_cost != nullptr) {
    std::vector<double> components;
    for (const auto& [id, node] : prior.nodes()) {
      components.push_back(attribute_cost(*predicted.find(id), *reference.find(id)));
    }
    *fixed_cost = sorted_sum(std::move(components));
  }
  return problem;
}

MetricResult ged_detailed(const SceneGraph& predicted, const SceneGraph& reference,
                          const SceneGraph& prior, MetricMode mode, std::size_t cap) {
  double fixed = 0;
  const PairingProblem problem = ged_problem(predicted, reference, prior, mode, &fixed);
  const MatchPlan plan = optimal_pairing(problem, cap);

  MetricResult result;
  result.value = plan.cost + fixed;
  result.approximate = plan.approximate;
  result.counts = plan_counts(plan);
  const AddedPortion pred = added_portion(predicted, prior);
  const AddedPortion ref = added_portion(reference, prior);
  for (auto [i, j] : plan.node_pairs) {
    add_attribute_counts(result.counts, *pred.nodes[i], *ref.nodes[j], nullptr);
  }
  for (const auto& [id, node] : prior.nodes()) {
    add_attribute_counts(result.counts, *predicted.find(id), *reference.find(id), &node);
  }
  return result;
}

double ged(const SceneGraph& predicted, const SceneGraph& reference, const SceneGraph& prior,
           MetricMode mode, std::size_t cap) {
  return ged_detailed(predicted, reference, prior, mode, cap).value;
}

PairingProblem red_problem(const SceneGraph& predicted, const SceneGraph& reference,
                           const SceneGraph& prior, MetricMode mode,
                           const SimilarityProvider& provider, double* fixed_cost) {
  check_inputs(predicted, reference, prior);
  const AddedPortion pred = added_portion(predicted, prior);
  const AddedPortion ref = added_portion(reference, prior);

  PairingProblem problem;
  problem.node_cost.assign(pred.nodes.size(),
                           std::vector<std::optional<double>>(ref.nodes.size()));
  for (std::size_t i = 0; i < pred.nodes.size(); ++i) {
    for (std::size_t j = 0; j < ref.nodes.size(); ++j) {
      problem.node_cost[i][j] =
          node_dissimilarity(*pred.nodes[i], *ref.nodes[j], mode, provider);
    }
  }
  problem.pred_node_unmatched.assign(pred.nodes.size(), unmatched_pred_cost(mode));
  problem.ref_node_unmatched.assign(ref.nodes.size(), 1.0);

  problem.pred_edges = pred.specs;
  problem.ref_edges = ref.specs;
  problem.edge_cost.assign(pred.edges.size(),
                           std::vector<std::optional<double>>(ref.edges.size()));
  for (std::size_t i = 0; i < pred.edges.size(); ++i) {
    for (std::size_t j = 0; j < ref.edges.size(); ++j) {
      problem.edge_cost[i][j] = edge_dissimilarity(predicted, *pred.edges[i], reference,
                                                   *ref.edges[j], mode, provider);
    }
  }
  problem.pred_edge_unmatched.assign(pred.edges.size(), unmatched_pred_cost(mode));
  problem.ref_edge_unmatched.assign(ref.edges.size(), 1.0);

  if (fixed_cost != nullptr) {
    std::vector<double> components;
    for (const auto& [id, node] : prior.nodes()) {
      const Node& p = *predicted.find(id);
      const Node& r = *reference.find(id);
      if (p.attributes == r.attributes) continue;
      components.push_back(node_dissimilarity(p, r, mode, provider));
    }
    *fixed_cost = sorted_sum(std::move(components));
  }
  return problem;
}

MetricResult red_detailed(const SceneGraph& predicted, const SceneGraph& reference,
                          const SceneGraph& prior, MetricMode mode,
                          const SimilarityProvider& provider, std::size_t cap) {
  double fixed = 0;
  const PairingProblem problem =
      red_problem(predicted, reference, prior, mode, provider, &fixed);
  const MatchPlan plan = optimal_pairing(problem, cap);

  double baseline_fixed = 0;
  const PairingProblem baseline =
      red_problem(prior, reference, prior, MetricMode::kSoft, provider, &baseline_fixed);
  const double normalizer = optimal_pairing(baseline, cap).cost + baseline_fixed;
  if (normalizer <= 0) {
    throw UndefinedMetric("reference adds nothing to the prior context; RED is undefined");
  }

  MetricResult result;
  result.value = (plan.cost + fixed) / normalizer;
  result.approximate = plan.approximate;
  result.counts = plan_counts(plan);
  return result;
}

double red(const SceneGraph& predicted, const SceneGraph& reference, const SceneGraph& prior,
           MetricMode mode, const SimilarityProvider& provider, std::size_t cap) {
  return red_detailed(predicted, reference, prior, mode, provider, cap).value;
}

nlohmann::json to_json(const MetricReport& report) {
  auto opt = [](const std::optional<double>& v) -> nlohmann::json {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
  };
  nlohmann::json out = {
      {"sample_id", report.sample_id},
      {"status", report.status},
      {"h_ged", opt(report.h_ged)},
      {"s_ged", opt(report.s_ged)},
      {"h_red", opt(report.h_red)},
      {"s_red", opt(report.s_red)},
      {"approximate", report.approximate},
      {"diagnostics",
       {{"matched_nodes", report.counts.matched_nodes},
        {"missing_nodes", report.counts.missing_nodes},
        {"extra_nodes", report.counts.extra_nodes},
        {"matched_edges", report.counts.matched_edges},
        {"missing_edges", report.counts.missing_edges},
        {"extra_edges", report.counts.extra_edges},
        {"matched_attributes", report.counts.matched_attributes},
        {"missing_attributes", report.counts.missing_attributes},
        {"extra_attributes", report.counts.extra_attributes}}}};
  if (!report.error.empty()) out["error"] = report.error;
  if (!report.note.empty()) out["note"] = report.note;
  return out;
}

}  // namespace spice
