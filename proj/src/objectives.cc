#include "spice/objectives.h"

#include <cmath>
#include <limits>
#include <string>

#include "spice/errors.h"

namespace spice {

EmbeddingBatch::EmbeddingBatch(std::size_t sequences, std::size_t positions,
                               std::size_t dimension, std::vector<double> data)
    : sequences_(sequences), positions_(positions), dimension_(dimension),
      data_(std::move(data)) {
  if (data_.size() != sequences * positions * dimension) {
    throw InvalidArgument("embedding batch holds " + std::to_string(data_.size()) +
                          " values, shape needs " +
                          std::to_string(sequences * positions * dimension));
  }
  for (double v : data_) {
    if (!std::isfinite(v)) throw InvalidArgument("embedding batch has a non-finite entry");
  }
}

EmbeddingBatch EmbeddingBatch::from_rows(const std::vector<std::vector<double>>& rows) {
  const std::size_t d = rows.empty() ? 0 : rows.front().size();
  std::vector<double> data;
  for (const auto& row : rows) {
    if (row.size() != d) throw InvalidArgument("rows differ in dimension");
    data.insert(data.end(), row.begin(), row.end());
  }
  return EmbeddingBatch(1, rows.size(), d, std::move(data));
}

EmbeddingBatch EmbeddingBatch::scaled(const std::vector<double>& factors) const {
  if (factors.size() != count()) throw InvalidArgument("one factor per vector expected");
  std::vector<double> data = data_;
  for (std::size_t i = 0; i < count(); ++i) {
    for (std::size_t c = 0; c < dimension_; ++c) data[i * dimension_ + c] *= factors[i];
  }
  return EmbeddingBatch(sequences_, positions_, dimension_, std::move(data));
}

double cosine(const double* a, const double* b, std::size_t dimension) {
  double dot = 0, na = 0, nb = 0;
  for (std::size_t c = 0; c < dimension; ++c) {
    dot += a[c] * b[c];
    na += a[c] * a[c];
    nb += b[c] * b[c];
  }
  if (na == 0 || nb == 0) throw InvalidArgument("cosine of a zero-norm embedding");
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

double contrastive_loss(const EmbeddingBatch& reconstructed, const EmbeddingBatch& anchors,
                        double temperature, ContrastiveOptions options) {
  if (reconstructed.sequences() != anchors.sequences() ||
      reconstructed.positions() != anchors.positions() ||
      reconstructed.dimension() != anchors.dimension()) {
    throw InvalidArgument("reconstructed and anchor batches differ in shape");
  }
  if (!(temperature > 0)) throw InvalidArgument("temperature must be positive");
  const std::size_t n = reconstructed.count();
  if (n < 2) throw InvalidArgument("contrastive loss needs at least two vectors");
  const std::size_t d = reconstructed.dimension();

  std::vector<double> logits(n);
  double total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      logits[j] = cosine(reconstructed.row(i), anchors.row(j), d) / temperature;
    }
    // log sum_{k != i} exp(logits[k]), shifted by the max for stability.
    double peak = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < n; ++k)
      if (k != i) peak = std::max(peak, logits[k]);
    double mass = 0;
    for (std::size_t k = 0; k < n; ++k)
      if (k != i) mass += std::exp(logits[k] - peak);
    const double log_denominator = peak + std::log(mass);

    double term = 0;
    if (options.positive_only) {
      term = logits[i] - log_denominator;
    } else {
      for (std::size_t j = 0; j < n; ++j) {
        if (options.exclude_self && j == i) continue;
        term += logits[j] - log_denominator;
      }
    }
    total += term;
  }
  const double mean = total / double(n);
  return options.negate ? -mean : mean;
}

double ortho_loss(const EmbeddingBatch& embeddings, double margin) {
  const std::size_t n = embeddings.count();
  if (n < 2) throw InvalidArgument("orthogonality loss needs at least two vectors");
  double sum = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      sum += std::max(cosine(embeddings.row(i), embeddings.row(j), embeddings.dimension()) -
                          margin,
                      0.0);
    }
  }
  return 2 * sum / (double(n) * double(n - 1));
}

double ce_loss(const std::vector<std::vector<double>>& predictions,
               const std::vector<std::vector<double>>& targets) {
  if (predictions.size() != targets.size()) {
    throw InvalidArgument("predictions cover " + std::to_string(predictions.size()) +
                          " positions, targets " + std::to_string(targets.size()));
  }
  double loss = 0;
  for (std::size_t pos = 0; pos < predictions.size(); ++pos) {
    const auto& p = predictions[pos];
    const auto& t = targets[pos];
    if (p.size() != t.size()) {
      throw InvalidArgument("position " + std::to_string(pos) + ": vocabulary sizes differ");
    }
    double mass = 0;
    for (double v : p) mass += v;
    if (std::abs(mass - 1) > 1e-6) {
      throw InvalidArgument("position " + std::to_string(pos) + ": probabilities sum to " +
                            std::to_string(mass));
    }
    for (std::size_t v = 0; v < p.size(); ++v) {
      if (t[v] == 0) continue;
      if (p[v] <= 0) {
        throw InfiniteLoss(pos, "zero probability on target token " + std::to_string(v) +
                                    " at position " + std::to_string(pos));
      }
      loss -= t[v] * std::log(p[v]);
    }
  }
  return loss;
}

double total_loss(double ce, double ortho, const std::vector<double>& contrast_terms,
                  const LossConfig& config) {
  if (contrast_terms.empty()) throw InvalidArgument("at least one contrastive term expected");
  double contrast = 0;
  for (double c : contrast_terms) contrast += c;
  return config.alpha * ce + config.beta * ortho +
         config.gamma / double(contrast_terms.size()) * contrast;
}

nlohmann::json objectives_golden() {
  using nlohmann::json;
  json cases = json::array();

  const double h = 0.2;
  const auto identical = EmbeddingBatch::from_rows({{1, 2, 3}, {1, 2, 3}, {1, 2, 3}, {1, 2, 3}});
  cases.push_back({{"name", "ortho_identical"},
                   {"margin", h},
                   {"count", identical.count()},
                   {"value", ortho_loss(identical, h)},
                   {"expected", 1 - h}});

  const auto basis = EmbeddingBatch::from_rows({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}});
  cases.push_back({{"name", "ortho_orthogonal"},
                   {"margin", 0.0},
                   {"value", ortho_loss(basis, 0.0)},
                   {"expected", 0.0}});

  const std::size_t vocab = 7, positions = 5;
  std::vector<std::vector<double>> uniform(positions, std::vector<double>(vocab, 1.0 / vocab));
  std::vector<std::vector<double>> onehot(positions, std::vector<double>(vocab, 0.0));
  for (std::size_t k = 0; k < positions; ++k) onehot[k][k % vocab] = 1;
  cases.push_back({{"name", "ce_uniform"},
                   {"vocabulary", vocab},
                   {"positions", positions},
                   {"value", ce_loss(uniform, onehot)},
                   {"expected", double(positions) * std::log(double(vocab))}});

  // Two vectors at 60 degrees; anchors equal to the reconstructions.
  const double tau = 0.5;
  const auto pair = EmbeddingBatch::from_rows({{1, 0}, {0.5, std::sqrt(3.0) / 2}});
  const double s = 0.5;
  cases.push_back({{"name", "contrastive_pair_literal"},
                   {"temperature", tau},
                   {"similarity", s},
                   {"value", contrastive_loss(pair, pair, tau)},
                   {"expected", (1 - s) / tau}});
  cases.push_back({{"name", "contrastive_pair_conventional"},
                   {"temperature", tau},
                   {"similarity", s},
                   {"value", contrastive_loss(pair, pair, tau, ContrastiveOptions::conventional())},
                   {"expected", -(1 - s) / tau}});

  const auto same = EmbeddingBatch::from_rows({{2, 1}, {2, 1}, {2, 1}});
  cases.push_back({{"name", "contrastive_identical_literal"},
                   {"temperature", tau},
                   {"count", same.count()},
                   {"value", contrastive_loss(same, same, tau)},
                   {"expected", 3 * std::log(1.0 / 2)}});

  LossConfig config;
  cases.push_back({{"name", "total_defaults"},
                   {"ce", 0.0},
                   {"ortho", 1.0},
                   {"contrast", {2.0, 4.0}},
                   {"value", total_loss(0, 1, {2, 4}, config)},
                   {"expected", 0.4}});
  return {{"cases", cases}};
}

}  // namespace spice
