// Command-line front end: dataset building, evaluation and small utilities.

#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "spice/embedding_client.h"
#include "spice/errors.h"
#include "spice/formal_language.h"
#include "spice/harness.h"
#include "spice/objectives.h"
#include "spice/rng.h"
#include "spice/scene_graph.h"
#include "spice/similarity.h"

namespace {

using namespace spice;

std::string slurp(const std::string& path) {
  if (path == "-") {
    std::ostringstream s;
    s << std::cin.rdbuf();
    return s.str();
  }
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void add_eval_options(CLI::App* cmd, EvalConfig& config, std::string& metrics, std::string& mode) {
  cmd->add_option("--predictions", config.predictions, "Prediction JSONL")->required();
  cmd->add_option("--output,-o", config.output, "Report JSONL ('-' for stdout)")
      ->default_val("-");
  cmd->add_option("--metrics", metrics, "ged, red or both")->default_val("both");
  cmd->add_option("--mode", mode, "hard, soft or both")->default_val("both");
  cmd->add_option("--provider", config.provider, "exact, jaccard or embedding:<table.jsonl>")
      ->default_val("jaccard");
  cmd->add_option("--cap", config.cap, "Exhaustive pairing cap")->default_val(kDefaultPairingCap);
  cmd->add_option("--jobs,-j", config.parallelism, "Worker threads")->default_val(1);
}

// Validates every parse in a prediction JSONL or one plain program file.
int parse_check(const std::string& path) {
  const std::string text = slurp(path);
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    std::istringstream in(text);
    int failures = 0;
    std::size_t lines = 0;
    std::string line;
    for (std::size_t number = 1; std::getline(in, line); ++number) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      ++lines;
      std::string id = "?";
      try {
        const auto record = nlohmann::json::parse(line);
        id = record.value("sample_id", record.value("scene_id", std::string("?")));
        parse_program(record.at("parse").get<std::string>());
      } catch (const ParseError& e) {
        std::cout << "line " << number << " (" << id << "): " << e.what() << "\n";
        ++failures;
      } catch (const std::exception& e) {
        throw SchemaError(number, e.what());
      }
    }
    std::cout << lines - failures << " of " << lines << " parses valid\n";
    return failures ? 2 : 0;
  }
  try {
    const ParseProgram program = parse_program(text);
    std::cout << program.ops.size() << " commands valid\n";
    return 0;
  } catch (const ParseError& e) {
    std::cout << e.what() << "\n";
    return 2;
  }
}

int render(const std::string& path, std::optional<std::uint64_t> shuffle_seed) {
  std::istringstream in(slurp(path));
  const auto graphs = read_scene_graphs(in);
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    if (i > 0) std::cout << "\n\n";
    if (shuffle_seed) {
      const std::uint64_t seed = derive_seed(*shuffle_seed, graphs[i].scene_id());
      std::cout << render_context(graphs[i], random_id_assignment(graphs[i], seed));
    } else {
      std::cout << render_context(graphs[i]);
    }
  }
  std::cout << "\n";
  return 0;
}

int fetch(const std::string& endpoint, const std::string& phrases_path,
          const std::string& output) {
  std::vector<std::string> phrases;
  std::istringstream in(slurp(phrases_path));
  for (std::string line; std::getline(in, line);) {
    if (!normalize_text(line).empty()) phrases.push_back(line);
  }
  const EmbeddingTable table = fetch_embeddings(endpoint, phrases);
  std::ofstream out(output, std::ios::binary);
  if (!out) throw InvalidArgument("cannot write " + output);
  write_embedding_table(out, table);
  std::cerr << "wrote " << table.size() << " embeddings\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Scene-graph context toolkit"};
  app.require_subcommand(1);

  BuildConfig build;
  auto* build_cmd = app.add_subcommand("build-dataset", "Curate scenes and sample context pairs");
  build_cmd->add_option("--input,-i", build.input, "Scene JSONL (Visual Genome or native)")
      ->required();
  build_cmd->add_option("--output,-o", build.output, "Dataset JSONL ('-' for stdout)")
      ->default_val("-");
  build_cmd->add_option("--stats", build.stats, "Stats JSON output");
  build_cmd->add_option("--pos", build.pos, "POS lexicon JSONL {\"token\", \"tag\"}");
  build_cmd->add_option("--provider", build.provider, "Similarity for merging")
      ->default_val("jaccard");
  build_cmd->add_option("--seed", build.seed)->default_val(0);
  build_cmd->add_option("--pairs-per-scene", build.pairs_per_scene)->default_val(5);
  build_cmd->add_option("--jobs,-j", build.parallelism)->default_val(1);
  build_cmd->add_option("--iou-threshold", build.curation.iou_threshold)->default_val(0.5);
  build_cmd->add_option("--name-sim-threshold", build.curation.name_sim_threshold)
      ->default_val(0.7);
  build_cmd->add_option("--attr-merge-threshold", build.curation.attr_merge_threshold)
      ->default_val(0.7);
  build_cmd->add_option("--min-nodes", build.curation.min_nodes)->default_val(4);
  build_cmd->add_option("--min-edges", build.curation.min_edges)->default_val(4);
  build_cmd->add_option("--dup-size-penalty", build.curation.dup_size_penalty)->default_val(1);
  build_cmd->add_option("--min-term-count", build.curation.min_term_count)->default_val(2);
  build_cmd->add_option("--max-words", build.curation.max_words_per_element)->default_val(3);

  EvalConfig eval;
  std::string eval_metrics, eval_mode;
  auto* eval_cmd = app.add_subcommand("evaluate", "Score single-step predictions");
  eval_cmd->add_option("--dataset,-d", eval.dataset, "Dataset JSONL")->required();
  add_eval_options(eval_cmd, eval, eval_metrics, eval_mode);

  EvalConfig seq;
  std::string seq_metrics, seq_mode, seq_style;
  auto* seq_cmd = app.add_subcommand("evaluate-sequence", "Score multi-step predictions");
  seq_cmd->add_option("--sequences,-d", seq.dataset, "Sequence JSONL")->required();
  seq_cmd->add_option("--style", seq_style, "ground-truth or carried")
      ->default_val("ground-truth");
  add_eval_options(seq_cmd, seq, seq_metrics, seq_mode);

  std::string check_path;
  auto* check_cmd = app.add_subcommand("parse-check", "Validate a parse file");
  check_cmd->add_option("file", check_path, "Prediction JSONL or program text ('-' for stdin)")
      ->required();

  std::string render_path;
  std::optional<std::uint64_t> render_seed;
  auto* render_cmd = app.add_subcommand("render-context", "Print graphs as context text");
  render_cmd->add_option("file", render_path, "Scene graph JSONL ('-' for stdin)")->required();
  render_cmd->add_option("--random-ids", render_seed, "Relabel ids randomly with this seed");

  auto* golden_cmd = app.add_subcommand("objectives-golden", "Print loss closed-form cases");

  std::string endpoint, phrases_path, table_path;
  auto* fetch_cmd = app.add_subcommand("fetch-embeddings", "Build an embedding table");
  fetch_cmd->add_option("--endpoint", endpoint, "http://host:port")->required();
  fetch_cmd->add_option("--phrases", phrases_path, "One phrase per line")->required();
  fetch_cmd->add_option("--output,-o", table_path, "Embedding table JSONL")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*build_cmd) return run_build_dataset(build, std::cerr);
    if (*eval_cmd) {
      eval.metrics = parse_metric_selection(eval_metrics);
      eval.modes = parse_mode_selection(eval_mode);
      return run_evaluate(eval, std::cerr);
    }
    if (*seq_cmd) {
      seq.metrics = parse_metric_selection(seq_metrics);
      seq.modes = parse_mode_selection(seq_mode);
      seq.style = parse_eval_style(seq_style);
      if (seq.style == EvalStyle::kSingleStep) {
        throw InvalidArgument("evaluate-sequence needs --style ground-truth or carried");
      }
      return run_evaluate_sequence(seq, std::cerr);
    }
    if (*check_cmd) return parse_check(check_path);
    if (*render_cmd) return render(render_path, render_seed);
    if (*golden_cmd) {
      std::cout << objectives_golden().dump(2) << "\n";
      return 0;
    }
    if (*fetch_cmd) return fetch(endpoint, phrases_path, table_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
