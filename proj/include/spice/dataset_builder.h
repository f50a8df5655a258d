#pragma once

// Curation of raw annotated scenes into clean scene graphs, and sampling of
// (prior, reference) context pairs from them.

#include <cstddef>
#include <cstdint>
#include <istream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "spice/formal_language.h"
#include "spice/scene_graph.h"
#include "spice/similarity.h"

namespace spice {

// token -> part-of-speech tag (Penn or universal tag set).
using PosLexicon = std::map<std::string, std::string>;

struct RawNode {
  std::uint64_t id = 0;
  std::string name;
  std::vector<std::string> attributes;
  std::optional<BoundingBox> bbox;
};

struct RawEdge {
  std::uint64_t source = 0;
  std::uint64_t target = 0;
  std::string predicate;
};

struct RawScene {
  std::string scene_id;
  std::string image;
  std::vector<RawNode> nodes;
  std::vector<RawEdge> edges;
  std::shared_ptr<const PosLexicon> pos;  // null when no tags were supplied
  std::size_t merged = 0;                 // duplicate nodes folded by dedup_nodes
  std::vector<std::string> flags;         // e.g. "pos-unfiltered"
};

struct CurationConfig {
  double iou_threshold = 0.5;
  double name_sim_threshold = 0.7;
  double attr_merge_threshold = 0.7;
  std::size_t min_nodes = 4;
  std::size_t min_edges = 4;
  std::size_t dup_size_penalty = 1;
  std::size_t min_term_count = 2;
  std::size_t max_words_per_element = 3;

  void validate() const;
};

double iou(const BoundingBox& a, const BoundingBox& b);

// Normalizes labels, drops over-long or unusable elements and noun-tagged
// attributes and predicates, and merges near-identical attributes of a node
// (keeping the shorter one).
RawScene standardize(const RawScene& raw, const CurationConfig& config,
                     const SimilarityProvider& provider);

// Folds every group of nodes linked by (IoU >= threshold and name
// similarity >= threshold) into one node. Returns the scene and the number
// of nodes removed.
std::pair<RawScene, std::size_t> dedup_nodes(const RawScene& scene, const CurationConfig& config,
                                             const SimilarityProvider& provider);

struct TermCounts {
  std::map<std::string, std::size_t> names;
  std::map<std::string, std::size_t> attributes;
  std::map<std::string, std::size_t> predicates;

  void add(const RawScene& scene);
  void merge(const TermCounts& other);
};

TermCounts count_terms(const std::vector<RawScene>& scenes);

// Removes rare terms, then scenes that are too small for their merge count.
std::vector<RawScene> filter_graphs(const std::vector<RawScene>& scenes,
                                    const CurationConfig& config, const TermCounts& counts);
std::optional<RawScene> filter_graph(const RawScene& scene, const CurationConfig& config,
                                     const TermCounts& counts);

SceneGraph to_scene_graph(const RawScene& scene);

struct SamplingConfig {
  double max_prior_fraction = 0.9;
  std::optional<double> fixed_prior_fraction;
  // Probability of adding 1, 2, 3, ... nodes in one update.
  std::vector<double> increment_weights = {0.80, 0.13, 0.07};
  double edge_keep = 0.5;
  double attribute_keep = 0.5;
};

struct SamplePair {
  std::string sample_id;
  std::string scene_id;
  std::string image;
  SceneGraph prior;
  SceneGraph reference;
  ParseProgram reference_parse;
  std::optional<std::string> utterance;
  std::optional<std::string> audio;
};

nlohmann::json to_json(const SamplePair& pair);
SamplePair sample_pair_from_json(const nlohmann::json& record);
// Reads dataset JSONL; throws SchemaError with the 1-based line number.
std::vector<SamplePair> read_samples(std::istream& in);

// `n_pairs` (prior, reference) pairs from one graph, deterministic in `seed`.
// Returns nothing for an empty graph.
std::vector<SamplePair> sample_context_pairs(const SceneGraph& graph, std::uint64_t seed,
                                             std::size_t n_pairs,
                                             const SamplingConfig& config = {},
                                             const std::string& image = "");

// One representative index per k-means cluster, sorted ascending.
std::vector<std::size_t> kmeans_representatives(const std::vector<std::vector<double>>& vectors,
                                                std::size_t k, std::uint64_t seed);

struct DatasetStats {
  std::size_t input_scenes = 0;
  std::size_t kept_scenes = 0;
  std::size_t merged_nodes = 0;
  std::size_t node_vocabulary = 0;
  std::size_t attribute_vocabulary = 0;
  std::size_t predicate_vocabulary = 0;
  double average_size = 0;
  std::size_t samples = 0;
  std::size_t unique_scenes = 0;
  double nodes_added = 0;
  double attributes_added = 0;
  double edges_added = 0;
  bool pos_filtered = true;
};

DatasetStats compute_stats(std::size_t input_scenes, const std::vector<RawScene>& kept,
                           const std::vector<SamplePair>& samples);
nlohmann::json to_json(const DatasetStats& stats);

// Scene input, one JSON object per line: either a Visual Genome scene graph
// (keyed by "objects"/"relationships") or this library's own graph format.
std::vector<RawScene> read_raw_scenes(std::istream& in);
RawScene raw_scene_from_json(const nlohmann::json& record);
// {"token": ..., "tag": ...} lines.
PosLexicon read_pos_lexicon(std::istream& in);

}  // namespace spice
