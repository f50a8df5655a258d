#pragma once

#include <cstddef>
#include <vector>

#include "json.hpp"

namespace spice {

// B sequences of K positions, each a d-dimensional vector, stored row-major
// so that vector i = (b, k) starts at data[(b * K + k) * d].
class EmbeddingBatch {
 public:
  EmbeddingBatch(std::size_t sequences, std::size_t positions, std::size_t dimension,
                 std::vector<double> data);
  // One sequence holding every row of `rows`.
  static EmbeddingBatch from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t sequences() const { return sequences_; }
  std::size_t positions() const { return positions_; }
  std::size_t dimension() const { return dimension_; }
  std::size_t count() const { return sequences_ * positions_; }
  const double* row(std::size_t i) const { return data_.data() + i * dimension_; }

  EmbeddingBatch scaled(const std::vector<double>& factors) const;

 private:
  std::size_t sequences_;
  std::size_t positions_;
  std::size_t dimension_;
  std::vector<double> data_;
};

struct LossConfig {
  double temperature = 0.1;
  double margin = 0.0;
  double alpha = 1.0;
  double beta = 0.1;
  double gamma = 0.1;
};

// Readings of the contrastive objective. The default is the formula taken
// literally: for each i, sum over every j of
//   log( exp(s(i,j)/t) / sum_{k != i} exp(s(i,k)/t) )
// with s(i,j) the cosine between reconstruction i and anchor j, averaged
// over i and not negated.
struct ContrastiveOptions {
  bool exclude_self = false;   // drop j == i from the outer sum
  bool negate = false;         // return the negated value
  bool positive_only = false;  // numerator only for j == i

  // Negated, positive pair only: the usual InfoNCE shape.
  static ContrastiveOptions conventional() { return {false, true, true}; }
};

double cosine(const double* a, const double* b, std::size_t dimension);

double contrastive_loss(const EmbeddingBatch& reconstructed, const EmbeddingBatch& anchors,
                        double temperature, ContrastiveOptions options = {});

// 2 * sum_{i<j} max(cos(e_i, e_j) - h, 0) / (N (N - 1)), N = B * K.
double ortho_loss(const EmbeddingBatch& embeddings, double margin);

// -sum over positions and vocabulary of t * log p. Throws InfiniteLoss when
// a target position has zero probability.
double ce_loss(const std::vector<std::vector<double>>& predictions,
               const std::vector<std::vector<double>>& targets);

double total_loss(double ce, double ortho, const std::vector<double>& contrast_terms,
                  const LossConfig& config = {});

// Closed-form cases with their computed values, for checking other
// implementations against this one.
nlohmann::json objectives_golden();

}  // namespace spice
