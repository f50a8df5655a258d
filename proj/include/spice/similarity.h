#pragma once

#include <cstddef>
#include <istream>
#include <map>
#include <memory>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace spice {

// Phrase similarity in [0, 1]: sim(a, a) == 1 and sim(a, b) == sim(b, a).
// Implementations are read-only after construction and safe to share.
class SimilarityProvider {
 public:
  virtual ~SimilarityProvider() = default;
  virtual double similarity(std::string_view a, std::string_view b) const = 0;
  virtual std::string label() const = 0;
};

// 1 when the normalized phrases are equal, else 0.
double sim_exact(std::string_view a, std::string_view b);

// Jaccard index of the whitespace token sets of the normalized phrases.
// Two empty phrases score 1.
double sim_jaccard(std::string_view a, std::string_view b);

// Cosine similarity clamped to [0, 1]; a zero vector scores 0.
double clamped_cosine(std::span<const double> a, std::span<const double> b);

// Phrase -> fixed-dimension vector, keyed by normalized phrase.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  EmbeddingTable(std::size_t dimension, std::string source)
      : dimension_(dimension), source_(std::move(source)) {}

  std::size_t dimension() const { return dimension_; }
  const std::string& source() const { return source_; }
  std::size_t size() const { return vectors_.size(); }
  bool empty() const { return vectors_.empty(); }
  const std::map<std::string, std::vector<double>>& entries() const {
    return vectors_;
  }

  // Throws InvalidArgument on a dimension mismatch or non-finite entry.
  // The first insert into a table built with dimension 0 fixes it.
  void insert(std::string_view phrase, std::vector<double> vector);

  const std::vector<double>* find(std::string_view phrase) const;

  // Throws LookupError naming the phrase.
  const std::vector<double>& at(std::string_view phrase) const;

  friend bool operator==(const EmbeddingTable&, const EmbeddingTable&) = default;

 private:
  std::size_t dimension_ = 0;
  std::string source_;
  std::map<std::string, std::vector<double>> vectors_;
};

double sim_embedding(const EmbeddingTable& table, std::string_view a,
                     std::string_view b);

// JSONL: a header {"dimension", "source"} then one {"phrase", "vector"}
// per line. Doubles are written with round-trip precision.
void write_embedding_table(std::ostream& out, const EmbeddingTable& table);
// Throws SchemaError with the offending line.
EmbeddingTable read_embedding_table(std::istream& in);

class ExactSimilarity : public SimilarityProvider {
 public:
  double similarity(std::string_view a, std::string_view b) const override {
    return sim_exact(a, b);
  }
  std::string label() const override { return "exact"; }
};

class JaccardSimilarity : public SimilarityProvider {
 public:
  double similarity(std::string_view a, std::string_view b) const override {
    return sim_jaccard(a, b);
  }
  std::string label() const override { return "jaccard"; }
};

class EmbeddingSimilarity : public SimilarityProvider {
 public:
  explicit EmbeddingSimilarity(std::shared_ptr<const EmbeddingTable> table)
      : table_(std::move(table)) {}

  double similarity(std::string_view a, std::string_view b) const override {
    return sim_embedding(*table_, a, b);
  }
  std::string label() const override { return "embedding:" + table_->source(); }

 private:
  std::shared_ptr<const EmbeddingTable> table_;
};

// "exact", "jaccard" or "embedding:<table file>".
// Throws InvalidArgument for unknown specs.
std::shared_ptr<const SimilarityProvider> make_provider(std::string_view spec);

}  // namespace spice
