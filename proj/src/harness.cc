#include "spice/harness.h"

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <set>
#include <thread>

#include "spice/errors.h"
#include "spice/formal_language.h"
#include "spice/rng.h"

namespace spice {

namespace {

struct Applied {
  SceneGraph context;
  std::string status = "ok";
  std::string error;
};

// Executes a predicted parse on `base`; failures leave `base` unchanged.
Applied apply_parse(const SceneGraph& base, const std::optional<std::string>& parse) {
  Applied out;
  out.context = base;
  if (!parse) {
    out.status = "missing";
    out.error = "no prediction";
    return out;
  }
  try {
    out.context = execute(parse_program(*parse), base);
  } catch (const ParseError& e) {
    out.status = "parse-error";
    out.error = e.what();
  } catch (const ExecutionError& e) {
    out.status = "exec-error";
    out.error = e.what();
  }
  return out;
}

MetricReport score(const std::string& sample_id, const Applied& applied, const SceneGraph& prior,
                   const SceneGraph& reference, const SimilarityProvider& provider,
                   const EvalConfig& config) {
  MetricReport report;
  report.sample_id = sample_id;
  report.status = applied.status;
  report.error = applied.error;
  const SceneGraph& predicted = applied.context;
  const bool hard = config.modes != ModeSelection::kSoft;
  const bool soft = config.modes != ModeSelection::kHard;

  if (config.metrics != MetricSelection::kRed) {
    if (soft) {
      const MetricResult r = ged_detailed(predicted, reference, prior, MetricMode::kSoft, config.cap);
      report.s_ged = r.value;
      report.counts = r.counts;
      report.approximate |= r.approximate;
    }
    if (hard) {
      const MetricResult r = ged_detailed(predicted, reference, prior, MetricMode::kHard, config.cap);
      report.h_ged = r.value;
      report.counts = r.counts;
      report.approximate |= r.approximate;
    }
  }
  if (config.metrics != MetricSelection::kGed) {
    try {
      if (hard) {
        const MetricResult r =
            red_detailed(predicted, reference, prior, MetricMode::kHard, provider, config.cap);
        report.h_red = r.value;
        report.approximate |= r.approximate;
      }
      if (soft) {
        const MetricResult r =
            red_detailed(predicted, reference, prior, MetricMode::kSoft, provider, config.cap);
        report.s_red = r.value;
        report.approximate |= r.approximate;
      }
    } catch (const UndefinedMetric&) {
      report.note = "red undefined: reference adds nothing to the prior context";
    }
  }
  return report;
}

template <typename Reader>
auto read_file(const std::filesystem::path& path, Reader reader) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open " + path.string());
  return reader(in);
}

void write_lines(const std::filesystem::path& path, const std::vector<nlohmann::json>& records) {
  std::string text;
  for (const auto& r : records) text += r.dump() + "\n";
  if (path.empty() || path == "-") {
    std::fwrite(text.data(), 1, text.size(), stdout);
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot write " + path.string());
  out << text;
}

template <typename Fn>
int guarded(std::ostream& log, Fn fn) {
  try {
    return fn();
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
  }
  return 1;
}

// Which similarity scored RED. Embedding cosines are clamped to [0, 1].
void describe_provider(nlohmann::json& aggregate, const SimilarityProvider& provider) {
  aggregate["provider"] = provider.label();
  aggregate["similarity_clamped"] = provider.label().rfind("embedding:", 0) == 0;
}

void summarize(std::ostream& log, const Aggregate& aggregate) {
  log << "evaluated " << aggregate.samples << " samples";
  for (const auto& [status, count] : aggregate.status_counts) {
    if (status != "ok") log << ", " << count << " " << status;
  }
  log << "\n";
}

}  // namespace

MetricSelection parse_metric_selection(const std::string& text) {
  if (text == "ged") return MetricSelection::kGed;
  if (text == "red") return MetricSelection::kRed;
  if (text == "both") return MetricSelection::kBoth;
  throw InvalidArgument("metrics must be ged, red or both, got '" + text + "'");
}

ModeSelection parse_mode_selection(const std::string& text) {
  if (text == "hard") return ModeSelection::kHard;
  if (text == "soft") return ModeSelection::kSoft;
  if (text == "both") return ModeSelection::kBoth;
  throw InvalidArgument("mode must be hard, soft or both, got '" + text + "'");
}

EvalStyle parse_eval_style(const std::string& text) {
  if (text == "single-step") return EvalStyle::kSingleStep;
  if (text == "ground-truth") return EvalStyle::kSequentialGroundTruth;
  if (text == "carried") return EvalStyle::kSequentialCarried;
  throw InvalidArgument("style must be single-step, ground-truth or carried, got '" + text + "'");
}

void EvalConfig::validate() const {
  if (cap < 1) throw InvalidArgument("pairing cap must be at least 1");
  if (parallelism < 1) throw InvalidArgument("parallelism must be at least 1");
  for (const auto& path : {dataset, predictions}) {
    if (!std::filesystem::exists(path)) throw InvalidArgument("no such file: " + path.string());
  }
}

void parallel_for(std::size_t n, std::size_t degree, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::max<std::size_t>(1, std::min(degree, n));
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> threads;
    for (std::size_t t = 0; t < workers; ++t) threads.emplace_back(work);
    for (auto& t : threads) t.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::map<std::string, std::string> read_predictions(std::istream& in) {
  std::map<std::string, std::string> out;
  std::string line;
  for (std::size_t number = 1; std::getline(in, line); ++number) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::string id, parse;
    try {
      const auto record = nlohmann::json::parse(line);
      id = record.at("sample_id").get<std::string>();
      parse = record.at("parse").get<std::string>();
    } catch (const std::exception& e) {
      throw SchemaError(number, e.what());
    }
    if (!out.emplace(id, parse).second) {
      throw SchemaError(number, "repeated prediction for sample " + id);
    }
  }
  return out;
}

MetricReport evaluate_sample(const std::string& sample_id, const SceneGraph& prior,
                             const SceneGraph& reference,
                             const std::optional<std::string>& parse,
                             const SimilarityProvider& provider, const EvalConfig& config) {
  return score(sample_id, apply_parse(prior, parse), prior, reference, provider, config);
}

void Aggregate::add(const MetricReport& report) {
  ++samples;
  ++status_counts[report.status];
  auto add_value = [](MetricSummary& s, const std::optional<double>& v) {
    if (!v) return;
    s.sum += *v;
    ++s.count;
  };
  add_value(h_ged, report.h_ged);
  add_value(s_ged, report.s_ged);
  add_value(h_red, report.h_red);
  add_value(s_red, report.s_red);
  approximate += report.approximate;
}

bool Aggregate::partial() const {
  for (const auto& [status, count] : status_counts)
    if (status != "ok" && count > 0) return true;
  return false;
}

nlohmann::json to_json(const Aggregate& aggregate) {
  auto mean = [](const MetricSummary& s) -> nlohmann::json {
    auto m = s.mean();
    return m ? nlohmann::json(*m) : nlohmann::json(nullptr);
  };
  return {{"aggregate", true},
          {"samples", aggregate.samples},
          {"status", aggregate.status_counts},
          {"h_ged", mean(aggregate.h_ged)},
          {"s_ged", mean(aggregate.s_ged)},
          {"h_red", mean(aggregate.h_red)},
          {"s_red", mean(aggregate.s_red)},
          {"scored",
           {{"h_ged", aggregate.h_ged.count},
            {"s_ged", aggregate.s_ged.count},
            {"h_red", aggregate.h_red.count},
            {"s_red", aggregate.s_red.count}}},
          {"approximate", aggregate.approximate}};
}

EvaluationResult evaluate(const std::vector<SamplePair>& samples,
                          const std::map<std::string, std::string>& predictions,
                          const SimilarityProvider& provider, const EvalConfig& config) {
  std::vector<const SamplePair*> order;
  std::set<std::string> ids;
  for (const auto& s : samples) {
    if (!ids.insert(s.sample_id).second) {
      throw InvalidArgument("dataset repeats sample id " + s.sample_id);
    }
    order.push_back(&s);
  }
  for (const auto& [id, parse] : predictions) {
    if (!ids.count(id)) throw InvalidArgument("prediction for unknown sample " + id);
  }
  std::sort(order.begin(), order.end(),
            [](const SamplePair* a, const SamplePair* b) { return a->sample_id < b->sample_id; });

  EvaluationResult result;
  result.reports.resize(order.size());
  parallel_for(order.size(), config.parallelism, [&](std::size_t i) {
    const SamplePair& s = *order[i];
    auto it = predictions.find(s.sample_id);
    const std::optional<std::string> parse =
        it == predictions.end() ? std::nullopt : std::optional<std::string>(it->second);
    result.reports[i] = evaluate_sample(s.sample_id, s.prior, s.reference, parse, provider, config);
  });
  for (const auto& r : result.reports) result.aggregate.add(r);
  return result;
}

int run_evaluate(const EvalConfig& config, std::ostream& log) {
  return guarded(log, [&] {
    config.validate();
    const auto samples = read_file(config.dataset, read_samples);
    const auto predictions = read_file(config.predictions, read_predictions);
    const auto provider = make_provider(config.provider);
    const EvaluationResult result = evaluate(samples, predictions, *provider, config);
    std::vector<nlohmann::json> lines;
    for (const auto& r : result.reports) lines.push_back(to_json(r));
    nlohmann::json aggregate = to_json(result.aggregate);
    describe_provider(aggregate, *provider);
    lines.push_back(std::move(aggregate));
    write_lines(config.output, lines);
    summarize(log, result.aggregate);
    return result.exit_code();
  });
}

std::vector<SequenceSample> read_sequences(std::istream& in) {
  std::vector<SequenceSample> out;
  std::string line;
  for (std::size_t number = 1; std::getline(in, line); ++number) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto record = nlohmann::json::parse(line);
      SequenceSample seq;
      seq.scene_id = record.at("scene_id").get<std::string>();
      seq.initial = record.contains("initial") ? scene_graph_from_json(record.at("initial"))
                                               : SceneGraph{};
      std::size_t expected = 1;
      for (const auto& step : record.at("steps")) {
        if (step.at("step").get<std::size_t>() != expected) {
          throw InvalidArgument("steps must be numbered contiguously from 1");
        }
        SceneGraph reference = scene_graph_from_json(step.at("reference"));
        const SceneGraph& previous = seq.steps.empty() ? seq.initial : seq.steps.back();
        require_additive_superset(previous, reference,
                                  "step " + std::to_string(expected) +
                                      " does not extend the previous context");
        seq.steps.push_back(std::move(reference));
        ++expected;
      }
      if (seq.steps.empty()) throw InvalidArgument("sequence without steps");
      out.push_back(std::move(seq));
    } catch (const std::exception& e) {
      throw SchemaError(number, e.what());
    }
  }
  return out;
}

std::map<std::pair<std::string, std::size_t>, std::string> read_sequence_predictions(
    std::istream& in) {
  std::map<std::pair<std::string, std::size_t>, std::string> out;
  std::string line;
  for (std::size_t number = 1; std::getline(in, line); ++number) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::pair<std::string, std::size_t> key;
    std::string parse;
    try {
      const auto record = nlohmann::json::parse(line);
      key = {record.at("scene_id").get<std::string>(), record.at("step").get<std::size_t>()};
      parse = record.at("parse").get<std::string>();
    } catch (const std::exception& e) {
      throw SchemaError(number, e.what());
    }
    if (!out.emplace(key, parse).second) {
      throw SchemaError(number, "repeated prediction for " + key.first + " step " +
                                    std::to_string(key.second));
    }
  }
  return out;
}

SequenceResult evaluate_sequence(
    const std::vector<SequenceSample>& sequences,
    const std::map<std::pair<std::string, std::size_t>, std::string>& predictions,
    const SimilarityProvider& provider, const EvalConfig& config) {
  const bool carried = config.style == EvalStyle::kSequentialCarried;
  std::vector<const SequenceSample*> order;
  for (const auto& s : sequences) order.push_back(&s);
  std::sort(order.begin(), order.end(), [](const auto* a, const auto* b) {
    return a->scene_id < b->scene_id;
  });
  for (std::size_t i = 1; i < order.size(); ++i) {
    if (order[i]->scene_id == order[i - 1]->scene_id) {
      throw InvalidArgument("repeated sequence " + order[i]->scene_id);
    }
  }

  std::vector<std::vector<MetricReport>> per_scene(order.size());
  parallel_for(order.size(), config.parallelism, [&](std::size_t s) {
    const SequenceSample& seq = *order[s];
    SceneGraph context = seq.initial;
    bool broken = false;
    for (std::size_t k = 0; k < seq.steps.size(); ++k) {
      const std::string id = seq.scene_id + "#" + std::to_string(k + 1);
      auto it = predictions.find({seq.scene_id, k + 1});
      std::optional<std::string> parse;
      if (it != predictions.end() && !broken) parse = it->second;

      if (!carried) {
        const SceneGraph& prior = k == 0 ? seq.initial : seq.steps[k - 1];
        per_scene[s].push_back(evaluate_sample(id, prior, seq.steps[k], parse, provider, config));
        continue;
      }
      // Carried: each step builds on the previous predicted context and is
      // scored cumulatively against the initial one.
      Applied applied = apply_parse(context, parse);
      if (applied.status == "missing") {
        if (broken) applied.error = "an earlier step is missing";
        broken = true;
      }
      context = applied.context;
      per_scene[s].push_back(score(id, applied, seq.initial, seq.steps[k], provider, config));
    }
  });

  SequenceResult result;
  for (std::size_t s = 0; s < order.size(); ++s) {
    Aggregate scene;
    for (std::size_t k = 0; k < per_scene[s].size(); ++k) {
      const MetricReport& r = per_scene[s][k];
      nlohmann::json j = to_json(r);
      j["scene_id"] = order[s]->scene_id;
      j["step"] = k + 1;
      j["style"] = carried ? "carried" : "ground-truth";
      if (carried) j["extension"] = true;
      result.step_reports.push_back(std::move(j));
      scene.add(r);
      result.aggregate.add(r);
    }
    nlohmann::json j = to_json(scene);
    j.erase("aggregate");
    j["scene"] = order[s]->scene_id;
    result.scene_reports.push_back(std::move(j));
  }
  return result;
}

int run_evaluate_sequence(const EvalConfig& config, std::ostream& log) {
  return guarded(log, [&] {
    config.validate();
    const auto sequences = read_file(config.dataset, read_sequences);
    const auto predictions = read_file(config.predictions, read_sequence_predictions);
    const auto provider = make_provider(config.provider);
    const SequenceResult result = evaluate_sequence(sequences, predictions, *provider, config);
    std::vector<nlohmann::json> lines = result.step_reports;
    lines.insert(lines.end(), result.scene_reports.begin(), result.scene_reports.end());
    nlohmann::json aggregate = to_json(result.aggregate);
    aggregate["style"] =
        config.style == EvalStyle::kSequentialCarried ? "carried" : "ground-truth";
    describe_provider(aggregate, *provider);
    lines.push_back(std::move(aggregate));
    write_lines(config.output, lines);
    summarize(log, result.aggregate);
    return result.exit_code();
  });
}

BuildResult build_dataset(const std::vector<RawScene>& scenes, const BuildConfig& config,
                          const SimilarityProvider& provider) {
  config.curation.validate();
  std::set<std::string> ids;
  for (const auto& s : scenes) {
    if (!ids.insert(s.scene_id).second) throw InvalidArgument("repeated scene id " + s.scene_id);
  }

  const std::size_t n = scenes.size();
  std::vector<RawScene> cleaned(n);
  parallel_for(n, config.parallelism, [&](std::size_t i) {
    cleaned[i] =
        dedup_nodes(standardize(scenes[i], config.curation, provider), config.curation, provider)
            .first;
  });

  const TermCounts counts = count_terms(cleaned);

  std::vector<std::optional<RawScene>> kept(n);
  std::vector<std::vector<SamplePair>> pairs(n);
  parallel_for(n, config.parallelism, [&](std::size_t i) {
    kept[i] = filter_graph(cleaned[i], config.curation, counts);
    if (!kept[i]) return;
    pairs[i] = sample_context_pairs(to_scene_graph(*kept[i]),
                                    derive_seed(config.seed, kept[i]->scene_id),
                                    config.pairs_per_scene, config.sampling, kept[i]->image);
  });

  BuildResult result;
  std::vector<RawScene> kept_scenes;
  for (std::size_t i = 0; i < n; ++i) {
    if (!kept[i]) continue;
    kept_scenes.push_back(std::move(*kept[i]));
    for (auto& p : pairs[i]) result.samples.push_back(std::move(p));
  }
  result.stats = compute_stats(n, kept_scenes, result.samples);
  return result;
}

int run_build_dataset(const BuildConfig& config, std::ostream& log) {
  return guarded(log, [&] {
    if (config.parallelism < 1) throw InvalidArgument("parallelism must be at least 1");
    auto scenes = read_file(config.input, read_raw_scenes);
    if (!config.pos.empty()) {
      auto lexicon = std::make_shared<const PosLexicon>(read_file(config.pos, read_pos_lexicon));
      for (auto& s : scenes) s.pos = lexicon;
    } else {
      log << "warning: no POS annotations given; noun filtering skipped (pos-unfiltered)\n";
    }
    if (scenes.empty()) log << "warning: input holds no scenes\n";
    const auto provider = make_provider(config.provider);
    const BuildResult result = build_dataset(scenes, config, *provider);

    std::vector<nlohmann::json> lines;
    for (const auto& s : result.samples) lines.push_back(to_json(s));
    write_lines(config.output, lines);
    if (!config.stats.empty()) {
      std::ofstream out(config.stats, std::ios::binary);
      if (!out) throw InvalidArgument("cannot write " + config.stats.string());
      out << to_json(result.stats).dump(2) << "\n";
    }
    log << "kept " << result.stats.kept_scenes << " of " << result.stats.input_scenes
        << " scenes, wrote " << result.samples.size() << " samples\n";
    return 0;
  });
}

}  // namespace spice
