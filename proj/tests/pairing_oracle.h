#pragma once

// Brute-force reference for optimal_pairing: enumerates every partial
// injective node pairing via subset choice plus std::next_permutation and,
// for each, every partial injective edge pairing, keeping only edge pairs
// whose endpoints correspond. Shares nothing with the search in
// src/matching.cc beyond the problem definition.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "spice/matching.h"

namespace spice::testing {

inline std::vector<std::vector<std::size_t>> subsets_of_size(std::size_t n, std::size_t k) {
  std::vector<std::vector<std::size_t>> out;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    if (static_cast<std::size_t>(__builtin_popcount(mask)) != k) continue;
    std::vector<std::size_t> subset;
    for (std::size_t i = 0; i < n; ++i)
      if (mask & (1u << i)) subset.push_back(i);
    out.push_back(subset);
  }
  return out;
}

// Every partial injection from [0, m) into [0, n) as (left, right) pairs.
inline std::vector<std::vector<std::pair<std::size_t, std::size_t>>> partial_injections(
    std::size_t m, std::size_t n) {
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> out;
  for (std::size_t k = 0; k <= std::min(m, n); ++k) {
    for (const auto& left : subsets_of_size(m, k)) {
      for (auto right : subsets_of_size(n, k)) {
        do {
          std::vector<std::pair<std::size_t, std::size_t>> pairs;
          for (std::size_t t = 0; t < k; ++t) pairs.emplace_back(left[t], right[t]);
          out.push_back(pairs);
        } while (std::next_permutation(right.begin(), right.end()));
      }
    }
  }
  return out;
}

inline double brute_force_pairing_cost(const PairingProblem& p) {
  const std::size_t m = p.pred_nodes();
  const std::size_t n = p.ref_nodes();
  const auto edge_injections = partial_injections(p.pred_edges.size(), p.ref_edges.size());
  double best = std::numeric_limits<double>::infinity();

  for (const auto& node_pairs : partial_injections(m, n)) {
    double node_cost = 0;
    bool allowed = true;
    std::vector<std::optional<std::size_t>> to_ref(m);
    std::vector<bool> ref_used(n, false);
    for (auto [i, j] : node_pairs) {
      if (!p.node_cost[i][j]) {
        allowed = false;
        break;
      }
      node_cost += *p.node_cost[i][j];
      to_ref[i] = j;
      ref_used[j] = true;
    }
    if (!allowed) continue;
    for (std::size_t i = 0; i < m; ++i)
      if (!to_ref[i]) node_cost += p.pred_node_unmatched[i];
    for (std::size_t j = 0; j < n; ++j)
      if (!ref_used[j]) node_cost += p.ref_node_unmatched[j];

    auto corresponds = [&](const EdgeEnd& pe, const EdgeEnd& re) {
      if (pe.added != re.added) return false;
      if (!pe.added) return pe.key == re.key;
      return to_ref[pe.key].has_value() && *to_ref[pe.key] == re.key;
    };

    for (const auto& edge_pairs : edge_injections) {
      double edge_cost = 0;
      bool ok = true;
      std::vector<bool> pe_used(p.pred_edges.size(), false), re_used(p.ref_edges.size(), false);
      for (auto [a, b] : edge_pairs) {
        const auto& pe = p.pred_edges[a];
        const auto& re = p.ref_edges[b];
        if (!p.edge_cost[a][b] || !corresponds(pe.source, re.source) ||
            !corresponds(pe.target, re.target)) {
          ok = false;
          break;
        }
        edge_cost += *p.edge_cost[a][b];
        pe_used[a] = re_used[b] = true;
      }
      if (!ok) continue;
      for (std::size_t a = 0; a < pe_used.size(); ++a)
        if (!pe_used[a]) edge_cost += p.pred_edge_unmatched[a];
      for (std::size_t b = 0; b < re_used.size(); ++b)
        if (!re_used[b]) edge_cost += p.ref_edge_unmatched[b];
      best = std::min(best, node_cost + edge_cost);
    }
  }
  return best;
}

}  // namespace spice::testing
