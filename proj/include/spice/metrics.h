#pragma once

#include <cstddef>
#include <optional>
#include <string>

#include "json.hpp"
#include "spice/matching.h"
#include "spice/scene_graph.h"
#include "spice/similarity.h"

namespace spice {

// Hard penalizes missing and extra information; Soft only omissions.
enum class MetricMode { kHard, kSoft };

inline constexpr double kAttributePenalty = 0.25;

struct MatchCounts {
  std::size_t matched_nodes = 0;
  std::size_t missing_nodes = 0;
  std::size_t extra_nodes = 0;
  std::size_t matched_edges = 0;
  std::size_t missing_edges = 0;
  std::size_t extra_edges = 0;
  std::size_t matched_attributes = 0;
  std::size_t missing_attributes = 0;
  std::size_t extra_attributes = 0;

  friend bool operator==(const MatchCounts&, const MatchCounts&) = default;
};

struct MetricResult {
  double value = 0;
  bool approximate = false;
  MatchCounts counts;
};

// Graph edit distance over the portions of `predicted` and `reference` that
// extend `prior`. Exact label matches only: nodes and edges cost 1,
// attributes 0.25. Unnormalized. Throws NonMonotonicUpdate when either
// graph does not extend `prior`.
MetricResult ged_detailed(const SceneGraph& predicted, const SceneGraph& reference,
                          const SceneGraph& prior, MetricMode mode,
                          std::size_t cap = kDefaultPairingCap);
double ged(const SceneGraph& predicted, const SceneGraph& reference,
           const SceneGraph& prior, MetricMode mode, std::size_t cap = kDefaultPairingCap);

// Representation edit distance: similarity-weighted cost over descriptive
// phrases, divided by the Soft cost of leaving `prior` unchanged. Throws
// UndefinedMetric when `reference` adds nothing to `prior`.
MetricResult red_detailed(const SceneGraph& predicted, const SceneGraph& reference,
                          const SceneGraph& prior, MetricMode mode,
                          const SimilarityProvider& provider,
                          std::size_t cap = kDefaultPairingCap);
double red(const SceneGraph& predicted, const SceneGraph& reference, const SceneGraph& prior,
           MetricMode mode, const SimilarityProvider& provider,
           std::size_t cap = kDefaultPairingCap);

// "blue vibrant table": sorted attributes, then the name.
std::string node_phrase(const Node& node);

// Pairing problems the metrics solve, exposed for oracle tests.
// `fixed_cost` receives the cost of the pre-matched prior portion.
PairingProblem ged_problem(const SceneGraph& predicted, const SceneGraph& reference,
                           const SceneGraph& prior, MetricMode mode, double* fixed_cost);
PairingProblem red_problem(const SceneGraph& predicted, const SceneGraph& reference,
                           const SceneGraph& prior, MetricMode mode,
                           const SimilarityProvider& provider, double* fixed_cost);

// One evaluated sample.
struct MetricReport {
  std::string sample_id;
  std::optional<double> h_ged;
  std::optional<double> s_ged;
  std::optional<double> h_red;
  std::optional<double> s_red;
  bool approximate = false;
  MatchCounts counts;  // from the Hard GED pairing when GED is computed
  std::string status = "ok";  // ok | parse-error | exec-error | missing
  std::string error;
  std::string note;  // e.g. RED undefined for an empty reference update
};

nlohmann::json to_json(const MetricReport& report);

}  // namespace spice
