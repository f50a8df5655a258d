#include "spice/dataset_builder.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>
#include <tuple>

#include "spice/errors.h"
#include "spice/rng.h"

namespace spice {

namespace {

const std::set<std::string>& noun_tags() {
  static const std::set<std::string> kTags = {"NN", "NNS", "NNP", "NNPS", "NOUN", "PROPN"};
  return kTags;
}

std::vector<std::string> split_words(const std::string& text) {
  std::vector<std::string> words;
  std::istringstream in(text);
  for (std::string w; in >> w;) words.push_back(w);
  return words;
}

bool valid_box(const BoundingBox& b) {
  return std::isfinite(b.x) && std::isfinite(b.y) && std::isfinite(b.width) &&
         std::isfinite(b.height) && b.width > 0 && b.height > 0;
}

class Cleaner {
 public:
  Cleaner(const CurationConfig& config, const PosLexicon* pos) : config_(config), pos_(pos) {}

  std::optional<std::string> label(const std::string& raw) const {
    std::string text = normalize_text(raw);
    if (text.empty()) return std::nullopt;
    if (std::any_of(text.begin(), text.end(), is_reserved_char)) return std::nullopt;
    if (split_words(text).size() > config_.max_words_per_element) return std::nullopt;
    return text;
  }

  // Attributes and predicates made entirely of noun-tagged tokens.
  bool is_noun(const std::string& text) const {
    if (pos_ == nullptr) return false;
    for (const auto& word : split_words(text)) {
      auto it = pos_->find(word);
      if (it == pos_->end() || noun_tags().count(it->second) == 0) return false;
    }
    return true;
  }

 private:
  const CurationConfig& config_;
  const PosLexicon* pos_;
};

std::vector<std::string> merge_similar(std::vector<std::string> attributes, double threshold,
                                       const SimilarityProvider& provider) {
  std::sort(attributes.begin(), attributes.end(), [](const auto& a, const auto& b) {
    return a.size() != b.size() ? a.size() < b.size() : a < b;
  });
  attributes.erase(std::unique(attributes.begin(), attributes.end()), attributes.end());
  std::vector<std::string> kept;
  for (const auto& a : attributes) {
    const bool covered = std::any_of(kept.begin(), kept.end(), [&](const std::string& k) {
      return provider.similarity(a, k) >= threshold;
    });
    if (!covered) kept.push_back(a);
  }
  std::sort(kept.begin(), kept.end());
  return kept;
}

struct UnionFind {
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
  std::vector<std::size_t> parent;
};

std::vector<RawEdge> redirect_edges(const std::vector<RawEdge>& edges,
                                    const std::map<std::uint64_t, std::uint64_t>& target_of) {
  std::vector<RawEdge> out;
  std::set<std::tuple<std::uint64_t, std::uint64_t, std::string>> seen;
  for (const auto& edge : edges) {
    auto s = target_of.find(edge.source);
    auto t = target_of.find(edge.target);
    if (s == target_of.end() || t == target_of.end() || s->second == t->second) continue;
    if (!seen.emplace(s->second, t->second, edge.predicate).second) continue;
    out.push_back({s->second, t->second, edge.predicate});
  }
  return out;
}

double squared_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d += (a[i] - b[i]) * (a[i] - b[i]);
  return d;
}

std::string required_string(const nlohmann::json& record, const char* key) {
  const auto& value = record.at(key);
  if (value.is_string()) return value.get<std::string>();
  if (value.is_number_integer()) return std::to_string(value.get<std::int64_t>());
  throw InvalidArgument(std::string("'") + key + "' must be a string or integer");
}

std::optional<BoundingBox> box_from_json(const nlohmann::json& record) {
  if (record.contains("bbox") && !record.at("bbox").is_null()) {
    const auto v = record.at("bbox").get<std::vector<double>>();
    if (v.size() != 4) throw InvalidArgument("'bbox' must hold x, y, width, height");
    return BoundingBox{v[0], v[1], v[2], v[3]};
  }
  if (record.contains("x") && record.contains("w")) {
    return BoundingBox{record.at("x").get<double>(), record.at("y").get<double>(),
                       record.at("w").get<double>(), record.at("h").get<double>()};
  }
  return std::nullopt;
}

std::vector<std::string> string_list(const nlohmann::json& record, const char* key) {
  if (!record.contains(key) || record.at(key).is_null()) return {};
  return record.at(key).get<std::vector<std::string>>();
}

RawScene visual_genome_scene(const nlohmann::json& record) {
  RawScene scene;
  scene.scene_id = record.contains("image_id") ? required_string(record, "image_id")
                                               : required_string(record, "scene_id");
  scene.image = record.value("url", record.value("image", std::string()));
  std::map<std::int64_t, std::uint64_t> dense;

  auto add_object = [&](const nlohmann::json& object) -> std::uint64_t {
    const std::int64_t raw_id = object.at("object_id").get<std::int64_t>();
    auto it = dense.find(raw_id);
    if (it != dense.end()) return it->second;
    RawNode node;
    node.id = dense.size();
    if (object.contains("names")) {
      const auto names = object.at("names").get<std::vector<std::string>>();
      if (names.empty()) throw InvalidArgument("object without names");
      node.name = names.front();
    } else {
      node.name = object.at("name").get<std::string>();
    }
    node.attributes = string_list(object, "attributes");
    node.bbox = box_from_json(object);
    dense[raw_id] = node.id;
    scene.nodes.push_back(std::move(node));
    return scene.nodes.back().id;
  };
  auto endpoint = [&](const nlohmann::json& rel, const char* object_key,
                      const char* id_key) -> std::uint64_t {
    if (rel.contains(object_key) && rel.at(object_key).is_object()) {
      return add_object(rel.at(object_key));
    }
    const std::int64_t raw_id = rel.at(id_key).get<std::int64_t>();
    auto it = dense.find(raw_id);
    if (it == dense.end()) {
      throw InvalidArgument("relationship refers to unknown object " + std::to_string(raw_id));
    }
    return it->second;
  };

  for (const auto& object : record.at("objects")) add_object(object);
  if (record.contains("relationships")) {
    for (const auto& rel : record.at("relationships")) {
      RawEdge edge;
      edge.source = endpoint(rel, "subject", "subject_id");
      edge.target = endpoint(rel, "object", "object_id");
      edge.predicate = rel.at("predicate").get<std::string>();
      scene.edges.push_back(std::move(edge));
    }
  }
  return scene;
}

}  // namespace

void CurationConfig::validate() const {
  for (double t : {iou_threshold, name_sim_threshold, attr_merge_threshold}) {
    if (!(t >= 0 && t <= 1)) throw InvalidArgument("thresholds must lie in [0, 1]");
  }
  if (min_nodes == 0 || min_edges == 0 || min_term_count == 0 || max_words_per_element == 0) {
    throw InvalidArgument("count limits must be positive");
  }
}

double iou(const BoundingBox& a, const BoundingBox& b) {
  const double w = std::min(a.x + a.width, b.x + b.width) - std::max(a.x, b.x);
  const double h = std::min(a.y + a.height, b.y + b.height) - std::max(a.y, b.y);
  const double inter = (w > 0 && h > 0) ? w * h : 0.0;
  const double uni = a.width * a.height + b.width * b.height - inter;
  return uni > 0 ? inter / uni : 0.0;
}

RawScene standardize(const RawScene& raw, const CurationConfig& config,
                     const SimilarityProvider& provider) {
  const Cleaner clean(config, raw.pos.get());
  RawScene out;
  out.scene_id = raw.scene_id;
  out.image = raw.image;
  out.pos = raw.pos;
  out.merged = raw.merged;
  out.flags = raw.flags;
  if (!raw.pos && std::find(out.flags.begin(), out.flags.end(), "pos-unfiltered") ==
                      out.flags.end()) {
    out.flags.push_back("pos-unfiltered");
  }

  std::map<std::uint64_t, std::uint64_t> kept;
  for (const auto& node : raw.nodes) {
    auto name = clean.label(node.name);
    if (!name || kept.count(node.id)) continue;
    RawNode n;
    n.id = node.id;
    n.name = *name;
    std::vector<std::string> attributes;
    for (const auto& a : node.attributes) {
      auto attribute = clean.label(a);
      if (attribute && !clean.is_noun(*attribute)) attributes.push_back(*attribute);
    }
    n.attributes = merge_similar(std::move(attributes), config.attr_merge_threshold, provider);
    if (node.bbox && valid_box(*node.bbox)) n.bbox = node.bbox;
    kept[node.id] = node.id;
    out.nodes.push_back(std::move(n));
  }

  std::vector<RawEdge> edges;
  for (const auto& edge : raw.edges) {
    auto predicate = clean.label(edge.predicate);
    if (!predicate || clean.is_noun(*predicate)) continue;
    edges.push_back({edge.source, edge.target, *predicate});
  }
  out.edges = redirect_edges(edges, kept);
  return out;
}

std::pair<RawScene, std::size_t> dedup_nodes(const RawScene& scene, const CurationConfig& config,
                                             const SimilarityProvider& provider) {
  const auto& nodes = scene.nodes;
  const std::size_t n = nodes.size();
  UnionFind sets(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!nodes[i].bbox) continue;
    for (std::size_t j = i + 1; j < n; ++j) {
      if (!nodes[j].bbox) continue;
      if (iou(*nodes[i].bbox, *nodes[j].bbox) >= config.iou_threshold &&
          provider.similarity(nodes[i].name, nodes[j].name) >= config.name_sim_threshold) {
        sets.unite(i, j);
      }
    }
  }

  std::map<std::size_t, std::vector<std::size_t>> clusters;
  for (std::size_t i = 0; i < n; ++i) clusters[sets.find(i)].push_back(i);

  // The surviving node of each cluster, keyed by its original position.
  std::map<std::size_t, RawNode> survivors;
  std::map<std::uint64_t, std::uint64_t> target_of;
  for (const auto& [root, members] : clusters) {
    std::map<std::string, std::size_t> frequency;
    for (std::size_t m : members) ++frequency[nodes[m].name];
    auto better = [](const std::pair<const std::string, std::size_t>& a,
                     const std::pair<const std::string, std::size_t>& b) {
      if (a.second != b.second) return a.second > b.second;
      if (a.first.size() != b.first.size()) return a.first.size() < b.first.size();
      return a.first < b.first;
    };
    const std::string name =
        std::min_element(frequency.begin(), frequency.end(), better)->first;
    std::size_t keeper = n;
    for (std::size_t m : members) {
      if (nodes[m].name == name && (keeper == n || nodes[m].id < nodes[keeper].id)) keeper = m;
    }
    RawNode merged = nodes[keeper];
    std::set<std::string> attributes;
    for (std::size_t m : members) {
      attributes.insert(nodes[m].attributes.begin(), nodes[m].attributes.end());
      target_of[nodes[m].id] = merged.id;
    }
    merged.attributes.assign(attributes.begin(), attributes.end());
    survivors[keeper] = std::move(merged);
  }

  RawScene out = scene;
  out.nodes.clear();
  for (auto& [position, node] : survivors) out.nodes.push_back(std::move(node));
  out.edges = redirect_edges(scene.edges, target_of);
  const std::size_t removed = n - clusters.size();
  out.merged += removed;
  return {std::move(out), removed};
}

void TermCounts::add(const RawScene& scene) {
  for (const auto& node : scene.nodes) {
    ++names[node.name];
    for (const auto& a : node.attributes) ++attributes[a];
  }
  for (const auto& edge : scene.edges) ++predicates[edge.predicate];
}

void TermCounts::merge(const TermCounts& other) {
  for (const auto& [k, v] : other.names) names[k] += v;
  for (const auto& [k, v] : other.attributes) attributes[k] += v;
  for (const auto& [k, v] : other.predicates) predicates[k] += v;
}

TermCounts count_terms(const std::vector<RawScene>& scenes) {
  TermCounts counts;
  for (const auto& scene : scenes) counts.add(scene);
  return counts;
}

std::optional<RawScene> filter_graph(const RawScene& scene, const CurationConfig& config,
                                     const TermCounts& counts) {
  auto frequent = [&](const std::map<std::string, std::size_t>& table, const std::string& term) {
    auto it = table.find(term);
    return it != table.end() && it->second >= config.min_term_count;
  };
  RawScene out = scene;
  out.nodes.clear();
  out.edges.clear();
  std::map<std::uint64_t, std::uint64_t> kept;
  for (const auto& node : scene.nodes) {
    if (!frequent(counts.names, node.name)) continue;
    RawNode n = node;
    n.attributes.clear();
    for (const auto& a : node.attributes)
      if (frequent(counts.attributes, a)) n.attributes.push_back(a);
    kept[n.id] = n.id;
    out.nodes.push_back(std::move(n));
  }
  std::vector<RawEdge> edges;
  for (const auto& edge : scene.edges)
    if (frequent(counts.predicates, edge.predicate)) edges.push_back(edge);
  out.edges = redirect_edges(edges, kept);

  const std::size_t extra = config.dup_size_penalty * scene.merged;
  if (out.nodes.size() < config.min_nodes + extra || out.edges.size() < config.min_edges + extra) {
    return std::nullopt;
  }
  return out;
}

std::vector<RawScene> filter_graphs(const std::vector<RawScene>& scenes,
                                    const CurationConfig& config, const TermCounts& counts) {
  std::vector<RawScene> out;
  for (const auto& scene : scenes) {
    if (auto kept = filter_graph(scene, config, counts)) out.push_back(std::move(*kept));
  }
  return out;
}

SceneGraph to_scene_graph(const RawScene& scene) {
  GraphBuilder builder;
  builder.set_scene_id(scene.scene_id);
  for (const auto& node : scene.nodes) {
    builder.add_node(NodeId{node.id}, node.name, node.attributes, node.bbox);
  }
  for (const auto& edge : scene.edges) {
    builder.add_edge(NodeId{edge.source}, NodeId{edge.target}, edge.predicate);
  }
  return std::move(builder).build();
}

nlohmann::json to_json(const SamplePair& pair) {
  auto optional_text = [](const std::optional<std::string>& v) -> nlohmann::json {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
  };
  return {{"sample_id", pair.sample_id},
          {"scene_id", pair.scene_id},
          {"image", pair.image},
          {"prior", to_json(pair.prior)},
          {"reference", to_json(pair.reference)},
          {"reference_parse", format_program(pair.reference_parse)},
          {"utterance", optional_text(pair.utterance)},
          {"audio", optional_text(pair.audio)}};
}

SamplePair sample_pair_from_json(const nlohmann::json& record) {
  if (!record.is_object()) throw InvalidArgument("sample must be an object");
  SamplePair pair;
  pair.sample_id = record.at("sample_id").get<std::string>();
  pair.scene_id = record.value("scene_id", std::string());
  pair.image = record.value("image", std::string());
  pair.prior = scene_graph_from_json(record.at("prior"));
  pair.reference = scene_graph_from_json(record.at("reference"));
  require_additive_superset(pair.prior, pair.reference,
                            "sample " + pair.sample_id + ": reference does not extend prior");
  if (record.contains("reference_parse") && record.at("reference_parse").is_string()) {
    pair.reference_parse = parse_program(record.at("reference_parse").get<std::string>());
  } else {
    pair.reference_parse = canonicalize(pair.prior, pair.reference);
  }
  if (record.contains("utterance") && record.at("utterance").is_string()) {
    pair.utterance = record.at("utterance").get<std::string>();
  }
  if (record.contains("audio") && record.at("audio").is_string()) {
    pair.audio = record.at("audio").get<std::string>();
  }
  return pair;
}

std::vector<SamplePair> read_samples(std::istream& in) {
  std::vector<SamplePair> out;
  std::string line;
  for (std::size_t number = 1; std::getline(in, line); ++number) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(sample_pair_from_json(nlohmann::json::parse(line)));
    } catch (const SchemaError&) {
      throw;
    } catch (const std::exception& e) {
      throw SchemaError(number, e.what());
    }
  }
  return out;
}

std::vector<SamplePair> sample_context_pairs(const SceneGraph& graph, std::uint64_t seed,
                                             std::size_t n_pairs, const SamplingConfig& config,
                                             const std::string& image) {
  if (graph.empty()) return {};
  const SceneGraph source = graph.without_boxes();
  std::vector<NodeId> ids;
  for (const auto& [id, node] : source.nodes()) ids.push_back(id);
  const std::size_t n = ids.size();
  const double weight_total =
      std::accumulate(config.increment_weights.begin(), config.increment_weights.end(), 0.0);

  Rng rng(seed);
  std::vector<SamplePair> out;
  for (std::size_t p = 0; p < n_pairs; ++p) {
    const double f = config.fixed_prior_fraction
                         ? *config.fixed_prior_fraction
                         : rng.uniform(0.0, config.max_prior_fraction);
    std::vector<NodeId> order = ids;
    rng.shuffle(order);
    const std::size_t prior_size = std::min(n - 1, std::size_t(std::floor(f * double(n))));

    std::size_t increment = config.increment_weights.size();
    double u = rng.uniform01() * weight_total;
    for (std::size_t i = 0; i < config.increment_weights.size(); ++i) {
      if (u < config.increment_weights[i]) {
        increment = i + 1;
        break;
      }
      u -= config.increment_weights[i];
    }
    increment = std::max<std::size_t>(1, std::min(increment, n - prior_size));

    const std::set<NodeId> in_prior(order.begin(), order.begin() + prior_size);
    const std::set<NodeId> in_increment(order.begin() + prior_size,
                                        order.begin() + prior_size + increment);

    GraphBuilder prior;
    prior.set_scene_id(source.scene_id());
    std::map<NodeId, std::vector<std::string>> omitted;
    for (NodeId id : in_prior) {
      const Node& node = *source.find(id);
      std::vector<std::string> keep;
      for (const auto& a : node.attributes) {
        if (rng.bernoulli(f)) {
          keep.push_back(a);
        } else {
          omitted[id].push_back(a);
        }
      }
      prior.add_node(id, node.name, keep);
    }
    for (const auto& edge : source.edges()) {
      if (in_prior.count(edge.source) && in_prior.count(edge.target)) {
        prior.add_edge(edge.source, edge.target, edge.predicate);
      }
    }
    SceneGraph prior_graph = std::move(prior).build();

    GraphBuilder reference(prior_graph);
    for (NodeId id : in_increment) {
      const Node& node = *source.find(id);
      reference.add_node(id, node.name,
                         std::vector<std::string>(node.attributes.begin(), node.attributes.end()));
    }
    for (const auto& [id, attributes] : omitted) {
      std::vector<std::string> chosen;
      for (const auto& a : attributes)
        if (rng.bernoulli(config.attribute_keep)) chosen.push_back(a);
      if (!chosen.empty()) reference.add_attributes(id, chosen);
    }
    for (const auto& edge : source.edges()) {
      const bool touches = in_increment.count(edge.source) || in_increment.count(edge.target);
      const bool inside = reference.contains(edge.source) && reference.contains(edge.target);
      if (touches && inside && rng.bernoulli(config.edge_keep)) {
        reference.add_edge(edge.source, edge.target, edge.predicate);
      }
    }

    SamplePair pair;
    pair.sample_id = source.scene_id() + "-" + std::to_string(p);
    pair.scene_id = source.scene_id();
    pair.image = image;
    pair.reference = std::move(reference).build();
    pair.reference_parse = canonicalize(prior_graph, pair.reference);
    pair.prior = std::move(prior_graph);
    out.push_back(std::move(pair));
  }
  return out;
}

std::vector<std::size_t> kmeans_representatives(const std::vector<std::vector<double>>& vectors,
                                                std::size_t k, std::uint64_t seed) {
  const std::size_t n = vectors.size();
  if (n == 0) throw InvalidArgument("k-means needs at least one vector");
  if (k == 0 || k > n) {
    throw InvalidArgument("k must lie in [1, " + std::to_string(n) + "], got " +
                          std::to_string(k));
  }
  const std::size_t d = vectors.front().size();
  for (const auto& v : vectors) {
    if (v.size() != d) throw InvalidArgument("vectors differ in dimension");
    for (double x : v)
      if (!std::isfinite(x)) throw InvalidArgument("vectors must be finite");
  }

  Rng rng(seed);
  std::vector<std::size_t> seeds = {rng.uniform_index(n)};
  std::vector<double> nearest(n);
  for (std::size_t i = 0; i < n; ++i) nearest[i] = squared_distance(vectors[i], vectors[seeds[0]]);
  while (seeds.size() < k) {
    const double total = std::accumulate(nearest.begin(), nearest.end(), 0.0);
    std::size_t pick = n;
    if (total > 0) {
      double u = rng.uniform01() * total;
      for (std::size_t i = 0; i < n; ++i) {
        if (nearest[i] <= 0) continue;
        pick = i;
        if (u < nearest[i]) break;
        u -= nearest[i];
      }
    } else {
      std::vector<std::size_t> unused;
      for (std::size_t i = 0; i < n; ++i)
        if (std::find(seeds.begin(), seeds.end(), i) == seeds.end()) unused.push_back(i);
      pick = unused[rng.uniform_index(unused.size())];
    }
    seeds.push_back(pick);
    for (std::size_t i = 0; i < n; ++i)
      nearest[i] = std::min(nearest[i], squared_distance(vectors[i], vectors[pick]));
  }

  std::vector<std::vector<double>> centroids;
  for (std::size_t s : seeds) centroids.push_back(vectors[s]);
  std::vector<std::size_t> assignment(n);
  auto assign = [&] {
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t best = 0;
      double best_d = squared_distance(vectors[i], centroids[0]);
      for (std::size_t c = 1; c < k; ++c) {
        const double dist = squared_distance(vectors[i], centroids[c]);
        if (dist < best_d) {
          best = c;
          best_d = dist;
        }
      }
      assignment[i] = best;
    }
  };

  for (int iteration = 0; iteration < 100; ++iteration) {
    assign();
    std::vector<std::vector<double>> sums(k, std::vector<double>(d, 0.0));
    std::vector<std::size_t> sizes(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      ++sizes[assignment[i]];
      for (std::size_t c = 0; c < d; ++c) sums[assignment[i]][c] += vectors[i][c];
    }
    double movement = 0;
    for (std::size_t c = 0; c < k; ++c) {
      if (sizes[c] == 0) continue;  // an empty cluster keeps its centroid
      for (auto& x : sums[c]) x /= double(sizes[c]);
      movement = std::max(movement, std::sqrt(squared_distance(sums[c], centroids[c])));
      centroids[c] = std::move(sums[c]);
    }
    if (movement < 1e-6) break;
  }
  assign();

  std::vector<bool> taken(n, false);
  std::vector<std::size_t> chosen;
  auto closest = [&](std::size_t c, bool members_only) {
    std::size_t best = n;
    double best_d = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (taken[i] || (members_only && assignment[i] != c)) continue;
      const double dist = squared_distance(vectors[i], centroids[c]);
      if (best == n || dist < best_d) {
        best = i;
        best_d = dist;
      }
    }
    return best;
  };
  std::vector<std::size_t> empty_clusters;
  for (std::size_t c = 0; c < k; ++c) {
    const std::size_t i = closest(c, true);
    if (i == n) {
      empty_clusters.push_back(c);
      continue;
    }
    taken[i] = true;
    chosen.push_back(i);
  }
  for (std::size_t c : empty_clusters) {
    const std::size_t i = closest(c, false);
    taken[i] = true;
    chosen.push_back(i);
  }
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

DatasetStats compute_stats(std::size_t input_scenes, const std::vector<RawScene>& kept,
                           const std::vector<SamplePair>& samples) {
  DatasetStats stats;
  stats.input_scenes = input_scenes;
  stats.kept_scenes = kept.size();
  std::set<std::string> names, attributes, predicates;
  double size_total = 0;
  for (const auto& scene : kept) {
    stats.merged_nodes += scene.merged;
    if (!scene.pos) stats.pos_filtered = false;
    for (const auto& node : scene.nodes) {
      names.insert(node.name);
      attributes.insert(node.attributes.begin(), node.attributes.end());
    }
    for (const auto& edge : scene.edges) predicates.insert(edge.predicate);
    size_total += double(scene.nodes.size() + scene.edges.size());
  }
  stats.node_vocabulary = names.size();
  stats.attribute_vocabulary = attributes.size();
  stats.predicate_vocabulary = predicates.size();
  stats.average_size = kept.empty() ? 0.0 : size_total / double(kept.size());

  stats.samples = samples.size();
  std::set<std::string> scenes;
  double nodes = 0, attrs = 0, edges = 0;
  for (const auto& s : samples) {
    scenes.insert(s.scene_id);
    nodes += double(s.reference.nodes().size() - s.prior.nodes().size());
    attrs += double(s.reference.attribute_count() - s.prior.attribute_count());
    edges += double(s.reference.edges().size() - s.prior.edges().size());
  }
  stats.unique_scenes = scenes.size();
  if (!samples.empty()) {
    const double count = double(samples.size());
    stats.nodes_added = nodes / count;
    stats.attributes_added = attrs / count;
    stats.edges_added = edges / count;
  }
  return stats;
}

nlohmann::json to_json(const DatasetStats& stats) {
  return {{"#Scenes", stats.kept_scenes},
          {"#Nodes", stats.node_vocabulary},
          {"#Attributes", stats.attribute_vocabulary},
          {"#Predicates", stats.predicate_vocabulary},
          {"Avg. Size", stats.average_size},
          {"# Samples", stats.samples},
          {"# Unique Scenes", stats.unique_scenes},
          {"Avg. Nodes Added", stats.nodes_added},
          {"Avg. Attributes Added", stats.attributes_added},
          {"Avg. Edges Added", stats.edges_added},
          {"input_scenes", stats.input_scenes},
          {"merged_nodes", stats.merged_nodes},
          {"pos_filtered", stats.pos_filtered}};
}

RawScene raw_scene_from_json(const nlohmann::json& record) {
  if (!record.is_object()) throw InvalidArgument("scene must be an object");
  if (record.contains("objects")) return visual_genome_scene(record);

  RawScene scene;
  scene.scene_id = required_string(record, "scene_id");
  scene.image = record.value("image", std::string());
  for (const auto& n : record.at("nodes")) {
    RawNode node;
    node.id = n.at("id").get<std::uint64_t>();
    node.name = n.at("name").get<std::string>();
    node.attributes = string_list(n, "attributes");
    node.bbox = box_from_json(n);
    scene.nodes.push_back(std::move(node));
  }
  if (record.contains("edges")) {
    for (const auto& e : record.at("edges")) {
      scene.edges.push_back({e.at("source").get<std::uint64_t>(),
                             e.at("target").get<std::uint64_t>(),
                             e.at("predicate").get<std::string>()});
    }
  }
  return scene;
}

std::vector<RawScene> read_raw_scenes(std::istream& in) {
  std::vector<RawScene> out;
  std::string line;
  for (std::size_t number = 1; std::getline(in, line); ++number) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(raw_scene_from_json(nlohmann::json::parse(line)));
    } catch (const std::exception& e) {
      throw SchemaError(number, e.what());
    }
  }
  return out;
}

PosLexicon read_pos_lexicon(std::istream& in) {
  PosLexicon lexicon;
  std::string line;
  for (std::size_t number = 1; std::getline(in, line); ++number) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto record = nlohmann::json::parse(line);
      lexicon[normalize_text(record.at("token").get<std::string>())] =
          record.at("tag").get<std::string>();
    } catch (const std::exception& e) {
      throw SchemaError(number, e.what());
    }
  }
  return lexicon;
}

}  // namespace spice
