#include "spice/similarity.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "spice/errors.h"
#include "spice/scene_graph.h"

namespace spice {

namespace {

std::set<std::string> tokens(std::string_view phrase) {
  std::set<std::string> out;
  std::istringstream in{normalize_text(phrase)};
  std::string token;
  while (in >> token) out.insert(token);
  return out;
}

}  // namespace

double sim_exact(std::string_view a, std::string_view b) {
  return normalize_text(a) == normalize_text(b) ? 1.0 : 0.0;
}

double sim_jaccard(std::string_view a, std::string_view b) {
  const auto left = tokens(a);
  const auto right = tokens(b);
  if (left.empty() && right.empty()) return 1.0;
  std::size_t shared = 0;
  for (const auto& t : left) shared += right.count(t);
  const std::size_t total = left.size() + right.size() - shared;
  return static_cast<double>(shared) / static_cast<double>(total);
}

double clamped_cosine(std::span<const double> a, std::span<const double> b) {
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0 || nb == 0) return 0.0;
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), 0.0, 1.0);
}

void EmbeddingTable::insert(std::string_view phrase, std::vector<double> vector) {
  if (dimension_ == 0) dimension_ = vector.size();
  if (vector.size() != dimension_ || vector.empty()) {
    throw InvalidArgument("embedding for '" + std::string(phrase) + "' has dimension " +
                          std::to_string(vector.size()) + ", table expects " +
                          std::to_string(dimension_));
  }
  if (!std::all_of(vector.begin(), vector.end(), [](double v) { return std::isfinite(v); })) {
    throw InvalidArgument("embedding for '" + std::string(phrase) + "' is not finite");
  }
  vectors_[normalize_text(phrase)] = std::move(vector);
}

const std::vector<double>* EmbeddingTable::find(std::string_view phrase) const {
  auto it = vectors_.find(normalize_text(phrase));
  return it == vectors_.end() ? nullptr : &it->second;
}

const std::vector<double>& EmbeddingTable::at(std::string_view phrase) const {
  if (const auto* v = find(phrase)) return *v;
  throw LookupError("no embedding for phrase '" + std::string(phrase) + "'");
}

double sim_embedding(const EmbeddingTable& table, std::string_view a, std::string_view b) {
  if (normalize_text(a) == normalize_text(b)) return 1.0;
  return clamped_cosine(table.at(a), table.at(b));
}

void write_embedding_table(std::ostream& out, const EmbeddingTable& table) {
  out << nlohmann::json{{"dimension", table.dimension()}, {"source", table.source()}}.dump()
      << '\n';
  for (const auto& [phrase, vector] : table.entries()) {
    out << nlohmann::json{{"phrase", phrase}, {"vector", vector}}.dump() << '\n';
  }
}

EmbeddingTable read_embedding_table(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  EmbeddingTable table;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (normalize_text(line).empty()) continue;
    try {
      const auto record = nlohmann::json::parse(line);
      if (!have_header) {
        table = EmbeddingTable(record.at("dimension").get<std::size_t>(),
                               record.at("source").get<std::string>());
        have_header = true;
        continue;
      }
      table.insert(record.at("phrase").get<std::string>(),
                   record.at("vector").get<std::vector<double>>());
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError(line_no, e.what());
    } catch (const InvalidArgument& e) {
      throw SchemaError(line_no, e.what());
    }
  }
  if (!have_header) throw SchemaError(line_no + 1, "embedding table has no header");
  return table;
}

std::shared_ptr<const SimilarityProvider> make_provider(std::string_view spec) {
  if (spec == "exact") return std::make_shared<ExactSimilarity>();
  if (spec == "jaccard") return std::make_shared<JaccardSimilarity>();
  constexpr std::string_view kEmbedding = "embedding:";
  if (spec.starts_with(kEmbedding)) {
    const std::string path(spec.substr(kEmbedding.size()));
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot open embedding table " + path);
    return std::make_shared<EmbeddingSimilarity>(
        std::make_shared<const EmbeddingTable>(read_embedding_table(in)));
  }
  throw InvalidArgument("unknown similarity provider '" + std::string(spec) + "'");
}

}  // namespace spice
