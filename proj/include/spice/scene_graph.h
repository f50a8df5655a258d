#pragma once

#include <compare>
#include <cstdint>
#include <initializer_list>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace spice {

struct NodeId {
  std::uint64_t value = 0;

  friend auto operator<=>(const NodeId&, const NodeId&) = default;
};

inline std::ostream& operator<<(std::ostream& os, NodeId id) {
  return os << id.value;
}

// Pixel rectangle anchored at its top-left corner.
struct BoundingBox {
  double x = 0;
  double y = 0;
  double width = 0;
  double height = 0;

  double area() const { return width * height; }
  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

struct Node {
  NodeId id;
  std::string name;
  std::set<std::string> attributes;
  std::optional<BoundingBox> bbox;

  friend bool operator==(const Node&, const Node&) = default;
};

struct Edge {
  NodeId source;
  NodeId target;
  std::string predicate;

  friend auto operator<=>(const Edge&, const Edge&) = default;
};

using IdMap = std::map<NodeId, NodeId>;

// Lowercases, trims and collapses internal whitespace runs to one space.
std::string normalize_text(std::string_view text);

// True for characters that would make the context or program grammar
// ambiguous: , ( ) [ ] ;
bool is_reserved_char(char c);

// Normalizes `text` and checks it is a usable name, attribute or predicate.
// Throws GraphError(kInvalidLabel) otherwise; `role` names the field.
std::string normalize_label(std::string_view text, std::string_view role);

// An immutable, always-valid contextual state: unique node ids, normalized
// labels, edges whose endpoints resolve. Build or extend one via
// GraphBuilder.
class SceneGraph {
 public:
  SceneGraph() = default;

  // Validates and normalizes. Throws GraphError on any invariant violation.
  SceneGraph(std::string scene_id, std::vector<Node> nodes,
             std::vector<Edge> edges);

  const std::string& scene_id() const { return scene_id_; }
  const std::map<NodeId, Node>& nodes() const { return nodes_; }
  const std::set<Edge>& edges() const { return edges_; }

  bool empty() const { return nodes_.empty(); }
  bool contains(NodeId id) const { return nodes_.count(id) != 0; }
  const Node* find(NodeId id) const;
  std::size_t attribute_count() const;

  SceneGraph with_scene_id(std::string scene_id) const;
  SceneGraph without_boxes() const;

  // Applies a bijection over this graph's node ids.
  // Throws InvalidArgument when `id_map` is not one.
  SceneGraph relabeled(const IdMap& id_map) const;

  friend bool operator==(const SceneGraph&, const SceneGraph&) = default;

 private:
  friend class GraphBuilder;

  std::string scene_id_;
  std::map<NodeId, Node> nodes_;
  std::set<Edge> edges_;
};

// Mutable staging area for additive graph construction.
class GraphBuilder {
 public:
  GraphBuilder() = default;
  explicit GraphBuilder(SceneGraph base) : graph_(std::move(base)) {}

  void set_scene_id(std::string scene_id) {
    graph_.scene_id_ = std::move(scene_id);
  }

  // Throws GraphError(kDuplicateId) when `id` exists.
  void add_node(NodeId id, std::string_view name,
                const std::vector<std::string>& attributes = {},
                std::optional<BoundingBox> bbox = std::nullopt);

  // Unions attributes onto an existing node. Re-adds are no-ops.
  // Throws GraphError(kUnknownId).
  void add_attributes(NodeId id, const std::vector<std::string>& attributes);

  // Re-adding an identical edge is a no-op. Throws GraphError(kUnknownId).
  void add_edge(NodeId source, NodeId target, std::string_view predicate);

  bool contains(NodeId id) const { return graph_.contains(id); }

  SceneGraph build() && { return std::move(graph_); }
  const SceneGraph& peek() const { return graph_; }

 private:
  SceneGraph graph_;
};

// "Empty Context" for the empty graph; otherwise a "Nodes:" section with
// "id: name (a1, a2)" lines and an "Edges:" section with "src -> tgt: pred"
// lines, ordered by ascending (remapped) node id.
std::string render_context(const SceneGraph& graph);
std::string render_context(const SceneGraph& graph, const IdMap& id_map);

// Inverse of render_context. Boxes are not part of the text form, so the
// result carries none. Throws ParseError naming the 1-based line.
SceneGraph parse_context(std::string_view text, std::string scene_id = {});

// Permutation of the graph's ids onto 0..n-1, reproducible from `seed`.
IdMap random_id_assignment(const SceneGraph& graph, std::uint64_t seed);

// True when `larger` contains every node, attribute and edge of `smaller`
// under identical ids and names.
bool is_additive_superset(const SceneGraph& smaller, const SceneGraph& larger);

// Throws NonMonotonicUpdate describing the first violation, if any.
void require_additive_superset(const SceneGraph& smaller,
                               const SceneGraph& larger,
                               std::string_view what);

// JSONL scene-graph records:
// {"scene_id", "nodes": [{"id", "name", "attributes", "bbox"?}],
//  "edges": [{"source", "target", "predicate"}]}
nlohmann::json to_json(const SceneGraph& graph);
SceneGraph scene_graph_from_json(const nlohmann::json& record);

// Reads one graph per non-blank line. Throws SchemaError with the line.
std::vector<SceneGraph> read_scene_graphs(std::istream& in);
void write_scene_graphs(std::ostream& out,
                        const std::vector<SceneGraph>& graphs);

}  // namespace spice
