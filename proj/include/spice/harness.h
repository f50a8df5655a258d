#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "spice/dataset_builder.h"
#include "spice/metrics.h"
#include "spice/similarity.h"

namespace spice {

enum class MetricSelection { kGed, kRed, kBoth };
enum class ModeSelection { kHard, kSoft, kBoth };
enum class EvalStyle { kSingleStep, kSequentialGroundTruth, kSequentialCarried };

MetricSelection parse_metric_selection(const std::string& text);
ModeSelection parse_mode_selection(const std::string& text);
EvalStyle parse_eval_style(const std::string& text);

struct EvalConfig {
  std::filesystem::path dataset;
  std::filesystem::path predictions;
  std::filesystem::path output;
  MetricSelection metrics = MetricSelection::kBoth;
  ModeSelection modes = ModeSelection::kBoth;
  std::string provider = "jaccard";
  std::size_t cap = kDefaultPairingCap;
  std::size_t parallelism = 1;
  EvalStyle style = EvalStyle::kSingleStep;

  void validate() const;
};

// Runs fn(0..n-1) on up to `degree` threads. If any call throws, the
// exception of the lowest failing index is rethrown after all finish.
void parallel_for(std::size_t n, std::size_t degree, const std::function<void(std::size_t)>& fn);

// {"sample_id": ..., "parse": ...} lines. Throws SchemaError with the line
// number on malformed lines or repeated ids.
std::map<std::string, std::string> read_predictions(std::istream& in);

// Scores one predicted parse (nullopt when missing) against a sample. A
// parse or execution failure is scored as an empty update and annotated.
MetricReport evaluate_sample(const std::string& sample_id, const SceneGraph& prior,
                             const SceneGraph& reference,
                             const std::optional<std::string>& parse,
                             const SimilarityProvider& provider, const EvalConfig& config);

struct MetricSummary {
  double sum = 0;
  std::size_t count = 0;
  std::optional<double> mean() const {
    return count ? std::optional<double>(sum / double(count)) : std::nullopt;
  }
};

struct Aggregate {
  std::size_t samples = 0;
  std::map<std::string, std::size_t> status_counts;
  MetricSummary h_ged, s_ged, h_red, s_red;
  std::size_t approximate = 0;

  void add(const MetricReport& report);
  bool partial() const;
};

nlohmann::json to_json(const Aggregate& aggregate);

struct EvaluationResult {
  std::vector<MetricReport> reports;  // sorted by sample_id
  Aggregate aggregate;
  int exit_code() const { return aggregate.partial() ? 2 : 0; }
};

EvaluationResult evaluate(const std::vector<SamplePair>& samples,
                          const std::map<std::string, std::string>& predictions,
                          const SimilarityProvider& provider, const EvalConfig& config);

// Reads the configured files, writes the report JSONL (one record per
// sample plus a trailing aggregate record) and returns the exit code.
int run_evaluate(const EvalConfig& config, std::ostream& log);

// A scene described over several consecutive updates.
struct SequenceSample {
  std::string scene_id;
  SceneGraph initial;
  std::vector<SceneGraph> steps;  // reference context after step 1, 2, ...
};

// {"scene_id", "initial": graph, "steps": [{"step": 1, "reference": graph}, ...]}
std::vector<SequenceSample> read_sequences(std::istream& in);
// {"scene_id", "step", "parse"} lines keyed by (scene_id, step).
std::map<std::pair<std::string, std::size_t>, std::string> read_sequence_predictions(
    std::istream& in);

struct SequenceResult {
  std::vector<nlohmann::json> step_reports;
  std::vector<nlohmann::json> scene_reports;
  Aggregate aggregate;
  int exit_code() const { return aggregate.partial() ? 2 : 0; }
};

SequenceResult evaluate_sequence(
    const std::vector<SequenceSample>& sequences,
    const std::map<std::pair<std::string, std::size_t>, std::string>& predictions,
    const SimilarityProvider& provider, const EvalConfig& config);

int run_evaluate_sequence(const EvalConfig& config, std::ostream& log);

struct BuildConfig {
  std::filesystem::path input;
  std::filesystem::path output;
  std::filesystem::path stats;  // optional
  std::filesystem::path pos;    // optional POS lexicon
  std::string provider = "jaccard";
  std::uint64_t seed = 0;
  std::size_t pairs_per_scene = 5;
  std::size_t parallelism = 1;
  CurationConfig curation;
  SamplingConfig sampling;
};

struct BuildResult {
  std::vector<SamplePair> samples;
  DatasetStats stats;
};

BuildResult build_dataset(const std::vector<RawScene>& scenes, const BuildConfig& config,
                          const SimilarityProvider& provider);

int run_build_dataset(const BuildConfig& config, std::ostream& log);

}  // namespace spice
