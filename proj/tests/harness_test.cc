#include "spice/harness.h"

#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "spice/errors.h"
#include "spice/formal_language.h"
#include "test_graphs.h"

namespace spice {
namespace {

namespace fs = std::filesystem;

SceneGraph table_only(const std::string& id = "s") {
  GraphBuilder b;
  b.set_scene_id(id);
  b.add_node(NodeId{0}, "table");
  return std::move(b).build();
}

SceneGraph plus_chair(const SceneGraph& prior, std::vector<std::string> attrs = {"blue"}) {
  GraphBuilder b(prior);
  b.add_node(NodeId{1}, "chair", std::move(attrs));
  b.add_edge(NodeId{1}, NodeId{0}, "near");
  return std::move(b).build();
}

SamplePair make_sample(const std::string& id, const SceneGraph& prior,
                       const SceneGraph& reference) {
  SamplePair s;
  s.sample_id = id;
  s.scene_id = prior.scene_id();
  s.prior = prior;
  s.reference = reference;
  s.reference_parse = canonicalize(prior, reference);
  return s;
}

// Random samples; `predicted` receives a perturbed parse for each one.
std::vector<SamplePair> random_samples(std::uint64_t seed, int n,
                                       std::map<std::string, std::string>* predicted = nullptr) {
  Rng rng(seed);
  std::vector<SamplePair> out;
  for (int i = 0; i < n; ++i) {
    const auto t = testing::random_triple(rng);
    out.push_back(make_sample("r" + std::to_string(i), t.prior, t.reference));
    if (predicted) {
      (*predicted)[out.back().sample_id] = format_program(canonicalize(t.prior, t.predicted));
    }
  }
  return out;
}

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() /
            ("spice_harness_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
             "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  fs::path file(const std::string& name, const std::string& content = {}) const {
    const fs::path p = path_ / name;
    if (!content.empty()) std::ofstream(p, std::ios::binary) << content;
    return p;
  }

 private:
  fs::path path_;
};

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<nlohmann::json> read_json_lines(const fs::path& p) {
  std::istringstream in(read_text(p));
  std::vector<nlohmann::json> out;
  for (std::string line; std::getline(in, line);) out.push_back(nlohmann::json::parse(line));
  return out;
}

std::string prediction_line(const std::string& id, const std::string& parse) {
  return nlohmann::json{{"sample_id", id}, {"parse", parse}}.dump() + "\n";
}

const JaccardSimilarity kJaccard;

TEST(EvaluateTest, ReferenceParsesScoreZero) {
  const auto samples = random_samples(11, 60);
  std::map<std::string, std::string> predictions;
  for (const auto& s : samples) predictions[s.sample_id] = format_program(s.reference_parse);
  const auto result = evaluate(samples, predictions, kJaccard, EvalConfig{});
  EXPECT_EQ(result.exit_code(), 0);
  for (const auto& r : result.reports) {
    EXPECT_EQ(r.status, "ok");
    EXPECT_EQ(r.h_ged, 0.0);
    EXPECT_EQ(r.s_ged, 0.0);
    if (r.note.empty()) {
      EXPECT_EQ(r.h_red, 0.0);
      EXPECT_EQ(r.s_red, 0.0);
    }
  }
}

TEST(EvaluateTest, EmptyPredictionsGiveSoftRedOne) {
  const auto samples = random_samples(12, 60);
  std::map<std::string, std::string> predictions;
  for (const auto& s : samples) predictions[s.sample_id] = "";
  const auto result = evaluate(samples, predictions, kJaccard, EvalConfig{});
  std::size_t scored = 0;
  for (const auto& r : result.reports) {
    if (!r.s_red) continue;
    EXPECT_NEAR(*r.s_red, 1.0, 1e-9);
    ++scored;
  }
  EXPECT_GT(scored, 30u);
}

TEST(EvaluateTest, AggregateIsMeanOverSamples) {
  const SceneGraph prior = table_only();
  GraphBuilder b(prior);
  b.add_node(NodeId{1}, "chair", {"blue"});
  const SceneGraph reference = std::move(b).build();
  const std::vector<SamplePair> samples = {make_sample("a", prior, reference),
                                           make_sample("b", prior, reference)};
  // Dropping the attribute halves the soft edit (0.5); the empty update is 1.
  const std::map<std::string, std::string> predictions = {{"a", "#ADD_NODE(1, chair)"},
                                                          {"b", ""}};
  EvalConfig config;
  config.metrics = MetricSelection::kRed;
  config.modes = ModeSelection::kSoft;
  const auto result = evaluate(samples, predictions, kJaccard, config);
  ASSERT_EQ(result.reports.size(), 2u);
  EXPECT_NEAR(*result.aggregate.s_red.mean(), 0.75, 1e-12);
  EXPECT_FALSE(result.reports[0].h_red.has_value());
  EXPECT_FALSE(result.reports[0].s_ged.has_value());
}

TEST(EvaluateTest, FailedParsesScoreAsEmptyUpdates) {
  const SceneGraph prior = table_only();
  const SceneGraph reference = plus_chair(prior);
  const std::vector<SamplePair> samples = {make_sample("a", prior, reference),
                                           make_sample("b", prior, reference),
                                           make_sample("c", prior, reference)};
  const std::map<std::string, std::string> predictions = {
      {"a", "#ADD_NODE(1 chair"}, {"b", "#ADD_EDGE(5, 0, on)"}};
  const auto result = evaluate(samples, predictions, kJaccard, EvalConfig{});
  EXPECT_EQ(result.reports[0].status, "parse-error");
  EXPECT_EQ(result.reports[1].status, "exec-error");
  EXPECT_EQ(result.reports[2].status, "missing");
  const auto empty = evaluate_sample("x", prior, reference, "", kJaccard, EvalConfig{});
  for (const auto& r : result.reports) {
    EXPECT_EQ(r.h_ged, empty.h_ged);
    EXPECT_EQ(r.s_red, empty.s_red);
    EXPECT_FALSE(r.error.empty());
  }
  EXPECT_EQ(result.exit_code(), 2);
  EXPECT_EQ(result.aggregate.status_counts.at("missing"), 1u);
}

TEST(EvaluateTest, UnknownPredictionIsFatal) {
  const SceneGraph prior = table_only();
  const std::vector<SamplePair> samples = {make_sample("a", prior, plus_chair(prior))};
  EXPECT_THROW(evaluate(samples, {{"zzz", ""}}, kJaccard, EvalConfig{}), InvalidArgument);
}

TEST(EvaluateTest, UndefinedRedIsExcludedFromMeans) {
  const SceneGraph prior = table_only();
  const std::vector<SamplePair> samples = {make_sample("a", prior, prior),
                                           make_sample("b", prior, plus_chair(prior))};
  const auto result = evaluate(samples, {{"a", ""}, {"b", ""}}, kJaccard, EvalConfig{});
  EXPECT_FALSE(result.reports[0].note.empty());
  EXPECT_FALSE(result.reports[0].s_red.has_value());
  EXPECT_EQ(result.aggregate.s_red.count, 1u);
  EXPECT_EQ(result.aggregate.s_ged.count, 2u);
}

TEST(EvaluateTest, InvariantUnderParallelismAndOrder) {
  std::map<std::string, std::string> predictions;
  auto samples = random_samples(13, 80, &predictions);
  Rng rng(2);
  EvalConfig one;
  const auto base = evaluate(samples, predictions, kJaccard, one);
  std::vector<nlohmann::json> expected;
  for (const auto& r : base.reports) expected.push_back(to_json(r));

  rng.shuffle(samples);
  for (std::size_t jobs : {2u, 5u, 16u}) {
    EvalConfig many;
    many.parallelism = jobs;
    const auto other = evaluate(samples, predictions, kJaccard, many);
    std::vector<nlohmann::json> got;
    for (const auto& r : other.reports) got.push_back(to_json(r));
    EXPECT_EQ(got, expected) << jobs << " jobs";
    EXPECT_EQ(to_json(other.aggregate), to_json(base.aggregate));
  }
}

TEST(ReadPredictionsTest, ReportsLineNumbers) {
  std::istringstream ok(prediction_line("a", "") + "\n" + prediction_line("b", "x"));
  EXPECT_EQ(read_predictions(ok).size(), 2u);
  std::istringstream repeated(prediction_line("a", "") + prediction_line("a", ""));
  try {
    read_predictions(repeated);
    FAIL();
  } catch (const SchemaError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  std::istringstream broken(prediction_line("a", "") + "{not json\n");
  EXPECT_THROW(read_predictions(broken), SchemaError);
}

TEST(RunEvaluateTest, CorruptParseGivesPartialExit) {
  TempDir dir;
  const SceneGraph prior = table_only();
  const SceneGraph reference = plus_chair(prior);
  const auto good = make_sample("a", prior, reference);
  const auto bad = make_sample("b", prior, reference);
  EvalConfig config;
  config.dataset = dir.file("data.jsonl", to_json(good).dump() + "\n" + to_json(bad).dump() + "\n");
  config.predictions =
      dir.file("pred.jsonl", prediction_line("a", format_program(good.reference_parse)) +
                                 prediction_line("b", "#ADD_NODE(((("));
  config.output = dir.file("out.jsonl");
  std::ostringstream log;
  EXPECT_EQ(run_evaluate(config, log), 2);
  const auto lines = read_json_lines(config.output);
  ASSERT_EQ(lines.size(), 3u);
  EXPECT_EQ(lines[0]["status"], "ok");
  EXPECT_EQ(lines[1]["status"], "parse-error");
  EXPECT_EQ(lines[2]["aggregate"], true);
  EXPECT_EQ(lines[2]["status"]["parse-error"], 1);
  EXPECT_EQ(lines[2]["provider"], "jaccard");
  EXPECT_EQ(lines[2]["similarity_clamped"], false);
}

TEST(RunEvaluateTest, MalformedDatasetIsFatal) {
  TempDir dir;
  EvalConfig config;
  config.dataset = dir.file("data.jsonl", "{\"sample_id\": 3}\n");
  config.predictions = dir.file("pred.jsonl", "\n");
  config.output = dir.file("out.jsonl");
  std::ostringstream log;
  EXPECT_EQ(run_evaluate(config, log), 1);
  EXPECT_NE(log.str().find("line 1"), std::string::npos);
  config.dataset = dir.file("missing.jsonl");
  EXPECT_EQ(run_evaluate(config, log), 1);
}

// Sequences: an initial table, step 1 adds a chair, step 2 adds a lamp on the table.
SequenceSample two_step_sequence(const std::string& id) {
  SequenceSample seq;
  seq.scene_id = id;
  seq.initial = table_only(id);
  seq.steps.push_back(plus_chair(seq.initial));
  GraphBuilder b(seq.steps[0]);
  b.add_node(NodeId{2}, "lamp", {"white"});
  b.add_edge(NodeId{2}, NodeId{0}, "on");
  seq.steps.push_back(std::move(b).build());
  return seq;
}

const std::string kStep1 = "#ADD_NODE(1, chair, [blue]); #ADD_EDGE(1, 0, near)";
const std::string kStep2 = "#ADD_NODE(2, lamp, [white]); #ADD_EDGE(2, 0, on)";

TEST(SequenceTest, GroundTruthStepsAreIndependent) {
  const std::vector<SequenceSample> seqs = {two_step_sequence("s")};
  EvalConfig config;
  config.style = EvalStyle::kSequentialGroundTruth;
  // A wrong first step must not change how the second is scored.
  const auto good = evaluate_sequence(seqs, {{{"s", 1}, kStep1}, {{"s", 2}, kStep2}}, kJaccard,
                                      config);
  const auto bad = evaluate_sequence(seqs, {{{"s", 1}, "#ADD_NODE(7, dog)"}, {{"s", 2}, kStep2}},
                                     kJaccard, config);
  ASSERT_EQ(good.step_reports.size(), 2u);
  EXPECT_EQ(good.step_reports[1]["s_ged"], 0.0);
  EXPECT_EQ(bad.step_reports[1], good.step_reports[1]);
  EXPECT_GT(bad.step_reports[0]["h_ged"].get<double>(), 0.0);
  EXPECT_EQ(good.step_reports[0]["sample_id"], "s#1");
}

TEST(SequenceTest, CarriedScoresCumulatively) {
  const std::vector<SequenceSample> seqs = {two_step_sequence("s")};
  EvalConfig config;
  config.style = EvalStyle::kSequentialCarried;
  const auto result = evaluate_sequence(seqs, {{{"s", 1}, kStep1}, {{"s", 2}, kStep2}}, kJaccard,
                                        config);
  for (const auto& r : result.step_reports) {
    EXPECT_EQ(r["extension"], true);
    EXPECT_EQ(r["h_ged"], 0.0);
  }
  // Skipping step 1 leaves step 2 short of the whole cumulative update.
  const auto partial = evaluate_sequence(seqs, {{{"s", 1}, ""}, {{"s", 2}, kStep2}}, kJaccard,
                                         config);
  const double expected = ged(execute(parse_program(kStep2), seqs[0].initial), seqs[0].steps[1],
                              seqs[0].initial, MetricMode::kHard);
  EXPECT_EQ(partial.step_reports[1]["h_ged"], expected);
  EXPECT_GT(expected, 0.0);
}

TEST(SequenceTest, CarriedStepTwoExecErrorAfterFailedStepOne) {
  const std::vector<SequenceSample> seqs = {two_step_sequence("s")};
  EvalConfig config;
  config.style = EvalStyle::kSequentialCarried;
  // Step 1 fails to parse, so node 1 never exists when step 2 refers to it.
  const auto result = evaluate_sequence(
      seqs, {{{"s", 1}, "#ADD_NODE(1, chair"}, {{"s", 2}, "#ADD_ATTR(1, [red])"}}, kJaccard,
      config);
  EXPECT_EQ(result.step_reports[0]["status"], "parse-error");
  EXPECT_EQ(result.step_reports[1]["status"], "exec-error");
  EXPECT_EQ(result.exit_code(), 2);
  // Both failures score as the initial context carried forward.
  const double empty = ged(seqs[0].initial, seqs[0].steps[1], seqs[0].initial, MetricMode::kSoft);
  EXPECT_EQ(result.step_reports[1]["s_ged"], empty);
}

TEST(SequenceTest, CarriedMissingStepBreaksTheChain) {
  const std::vector<SequenceSample> seqs = {two_step_sequence("s")};
  EvalConfig config;
  config.style = EvalStyle::kSequentialCarried;
  const auto result = evaluate_sequence(seqs, {{{"s", 2}, kStep2}}, kJaccard, config);
  EXPECT_EQ(result.step_reports[0]["status"], "missing");
  EXPECT_EQ(result.step_reports[1]["status"], "missing");
  ASSERT_EQ(result.scene_reports.size(), 1u);
  EXPECT_EQ(result.scene_reports[0]["scene"], "s");
}

TEST(SequenceTest, ReaderRejectsNonExtendingStep) {
  const auto seq = two_step_sequence("s");
  nlohmann::json record = {{"scene_id", "s"},
                           {"initial", to_json(seq.initial)},
                           {"steps",
                            {{{"step", 1}, {"reference", to_json(seq.steps[1])}},
                             {{"step", 2}, {"reference", to_json(seq.steps[0])}}}}};
  std::istringstream in("\n" + record.dump() + "\n");
  try {
    read_sequences(in);
    FAIL();
  } catch (const SchemaError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(RunSequenceTest, WritesStepSceneAndAggregateRecords) {
  TempDir dir;
  const auto seq = two_step_sequence("s");
  nlohmann::json record = {{"scene_id", "s"},
                           {"initial", to_json(seq.initial)},
                           {"steps",
                            {{{"step", 1}, {"reference", to_json(seq.steps[0])}},
                             {{"step", 2}, {"reference", to_json(seq.steps[1])}}}}};
  EvalConfig config;
  config.style = EvalStyle::kSequentialCarried;
  config.dataset = dir.file("seq.jsonl", record.dump() + "\n");
  config.predictions = dir.file(
      "pred.jsonl", nlohmann::json{{"scene_id", "s"}, {"step", 1}, {"parse", kStep1}}.dump() +
                        "\n" +
                        nlohmann::json{{"scene_id", "s"}, {"step", 2}, {"parse", kStep2}}.dump() +
                        "\n");
  config.output = dir.file("out.jsonl");
  std::ostringstream log;
  EXPECT_EQ(run_evaluate_sequence(config, log), 0);
  const auto lines = read_json_lines(config.output);
  ASSERT_EQ(lines.size(), 4u);
  EXPECT_EQ(lines[2]["scene"], "s");
  EXPECT_EQ(lines[3]["style"], "carried");
  EXPECT_EQ(lines[3]["h_ged"], 0.0);
}

TEST(ParallelForTest, RethrowsLowestFailingIndex) {
  try {
    parallel_for(50, 8, [](std::size_t i) {
      if (i % 7 == 3) throw InvalidArgument("index " + std::to_string(i));
    });
    FAIL();
  } catch (const InvalidArgument& e) {
    EXPECT_STREQ(e.what(), "index 3");
  }
}

std::vector<RawScene> fixture_scenes() {
  std::ifstream in(fs::path(SPICE_TEST_DATA) / "scenes20.jsonl");
  return read_raw_scenes(in);
}

std::string dataset_text(const BuildResult& result) {
  std::string text;
  for (const auto& s : result.samples) text += to_json(s).dump() + "\n";
  return text;
}

TEST(BuildDatasetTest, ByteIdenticalAcrossJobCounts) {
  const auto scenes = fixture_scenes();
  ASSERT_EQ(scenes.size(), 20u);
  BuildConfig config;
  config.seed = 1;
  const std::string base = dataset_text(build_dataset(scenes, config, kJaccard));
  EXPECT_FALSE(base.empty());
  for (std::size_t jobs : {2u, 4u, 8u}) {
    config.parallelism = jobs;
    EXPECT_EQ(dataset_text(build_dataset(scenes, config, kJaccard)), base) << jobs << " jobs";
  }
}

TEST(BuildDatasetTest, MatchesCheckedInOutput) {
  TempDir dir;
  BuildConfig config;
  config.input = fs::path(SPICE_TEST_DATA) / "scenes20.jsonl";
  config.output = dir.file("out.jsonl");
  config.stats = dir.file("stats.json");
  config.seed = 1;
  config.parallelism = 3;
  std::ostringstream log;
  ASSERT_EQ(run_build_dataset(config, log), 0);
  EXPECT_EQ(read_text(config.output),
            read_text(fs::path(SPICE_TEST_DATA) / "scenes20_seed1.jsonl"));
  EXPECT_EQ(read_text(config.stats),
            read_text(fs::path(SPICE_TEST_DATA) / "scenes20_seed1_stats.json"));
  EXPECT_NE(log.str().find("pos-unfiltered"), std::string::npos);
}

TEST(BuildDatasetTest, SamplesReplayThroughExecute) {
  BuildConfig config;
  config.seed = 4;
  const auto result = build_dataset(fixture_scenes(), config, kJaccard);
  for (const auto& s : result.samples) {
    EXPECT_EQ(execute(s.reference_parse, s.prior), s.reference) << s.sample_id;
  }
}

TEST(BuildDatasetTest, EmptyInput) {
  TempDir dir;
  BuildConfig config;
  config.input = dir.file("empty.jsonl", "\n");
  config.output = dir.file("out.jsonl");
  config.stats = dir.file("stats.json");
  std::ostringstream log;
  EXPECT_EQ(run_build_dataset(config, log), 0);
  EXPECT_EQ(read_text(config.output), "");
  const auto stats = nlohmann::json::parse(read_text(config.stats));
  EXPECT_EQ(stats["# Samples"], 0);
  EXPECT_NE(log.str().find("no scenes"), std::string::npos);
}

TEST(BuildDatasetTest, BadLineIsFatal) {
  TempDir dir;
  std::ifstream fixture(fs::path(SPICE_TEST_DATA) / "scenes20.jsonl");
  std::string first;
  std::getline(fixture, first);
  BuildConfig config;
  config.input = dir.file("bad.jsonl", first + "\n{\"objects\": [{}]}\n");
  config.output = dir.file("out.jsonl");
  std::ostringstream log;
  EXPECT_EQ(run_build_dataset(config, log), 1);
  EXPECT_NE(log.str().find("line 2"), std::string::npos);
  EXPECT_FALSE(fs::exists(config.output));
}

TEST(BuildDatasetTest, RepeatedSceneIdRejected) {
  auto scenes = fixture_scenes();
  scenes.push_back(scenes.front());
  EXPECT_THROW(build_dataset(scenes, BuildConfig{}, kJaccard), InvalidArgument);
}

}  // namespace
}  // namespace spice
