#include "spice/scene_graph.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <charconv>
#include <sstream>

#include "spice/errors.h"
#include "spice/rng.h"

namespace spice {

namespace {

constexpr std::string_view kEmptyContext = "Empty Context";
constexpr std::string_view kNodesHeader = "Nodes:";
constexpr std::string_view kEdgesHeader = "Edges:";

std::string id_text(NodeId id) { return std::to_string(id.value); }

std::optional<std::uint64_t> parse_uint(std::string_view text) {
  if (text.empty()) return std::nullopt;
  std::uint64_t value = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  return value;
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) {
      lines.push_back(text.substr(start));
      break;
    }
    lines.push_back(text.substr(start, end - start));
    start = end + 1;
  }
  return lines;
}

void check_box(const BoundingBox& box, NodeId id) {
  const bool finite = std::isfinite(box.x) && std::isfinite(box.y) &&
                      std::isfinite(box.width) && std::isfinite(box.height);
  if (!finite || box.width <= 0 || box.height <= 0) {
    throw GraphError(GraphError::Kind::kInvalidBox,
                     "node " + id_text(id) + " has a degenerate bounding box");
  }
}

}  // namespace

std::string normalize_text(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (unsigned char c : text) {
    if (std::isspace(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

bool is_reserved_char(char c) {
  switch (c) {
    case ',':
    case '(':
    case ')':
    case '[':
    case ']':
    case ';':
      return true;
    default:
      return false;
  }
}

std::string normalize_label(std::string_view text, std::string_view role) {
  std::string label = normalize_text(text);
  if (label.empty()) {
    throw GraphError(GraphError::Kind::kInvalidLabel,
                     "empty " + std::string(role));
  }
  if (std::any_of(label.begin(), label.end(), is_reserved_char)) {
    throw GraphError(GraphError::Kind::kInvalidLabel,
                     std::string(role) + " '" + label +
                         "' contains a reserved character");
  }
  return label;
}

SceneGraph::SceneGraph(std::string scene_id, std::vector<Node> nodes,
                       std::vector<Edge> edges) {
  GraphBuilder builder;
  builder.set_scene_id(std::move(scene_id));
  for (auto& node : nodes) {
    builder.add_node(node.id, node.name,
                     {node.attributes.begin(), node.attributes.end()},
                     node.bbox);
  }
  for (const auto& edge : edges) {
    builder.add_edge(edge.source, edge.target, edge.predicate);
  }
  *this = std::move(builder).build();
}

const Node* SceneGraph::find(NodeId id) const {
  auto it = nodes_.find(id);
  return it == nodes_.end() ? nullptr : &it->second;
}

std::size_t SceneGraph::attribute_count() const {
  std::size_t count = 0;
  for (const auto& [id, node] : nodes_) count += node.attributes.size();
  return count;
}

SceneGraph SceneGraph::with_scene_id(std::string scene_id) const {
  SceneGraph copy = *this;
  copy.scene_id_ = std::move(scene_id);
  return copy;
}

SceneGraph SceneGraph::without_boxes() const {
  SceneGraph copy = *this;
  for (auto& [id, node] : copy.nodes_) node.bbox.reset();
  return copy;
}

SceneGraph SceneGraph::relabeled(const IdMap& id_map) const {
  if (id_map.size() != nodes_.size()) {
    throw InvalidArgument("id map has " + std::to_string(id_map.size()) +
                          " entries for " + std::to_string(nodes_.size()) +
                          " nodes");
  }
  std::set<NodeId> images;
  for (const auto& [from, to] : id_map) {
    if (!contains(from)) {
      throw InvalidArgument("id map references unknown node " + id_text(from));
    }
    if (!images.insert(to).second) {
      throw InvalidArgument("id map sends two nodes to " + id_text(to));
    }
  }
  SceneGraph out;
  out.scene_id_ = scene_id_;
  for (const auto& [id, node] : nodes_) {
    Node moved = node;
    moved.id = id_map.at(id);
    out.nodes_.emplace(moved.id, std::move(moved));
  }
  for (const auto& edge : edges_) {
    out.edges_.insert(
        Edge{id_map.at(edge.source), id_map.at(edge.target), edge.predicate});
  }
  return out;
}

void GraphBuilder::add_node(NodeId id, std::string_view name,
                            const std::vector<std::string>& attributes,
                            std::optional<BoundingBox> bbox) {
  if (graph_.contains(id)) {
    throw GraphError(GraphError::Kind::kDuplicateId,
                     "node id " + id_text(id) + " already exists");
  }
  Node node;
  node.id = id;
  node.name = normalize_label(name, "node name");
  for (const auto& attribute : attributes) {
    node.attributes.insert(normalize_label(attribute, "attribute"));
  }
  if (bbox) check_box(*bbox, id);
  node.bbox = bbox;
  graph_.nodes_.emplace(id, std::move(node));
}

void GraphBuilder::add_attributes(NodeId id,
                                  const std::vector<std::string>& attributes) {
  auto it = graph_.nodes_.find(id);
  if (it == graph_.nodes_.end()) {
    throw GraphError(GraphError::Kind::kUnknownId,
                     "unknown node id " + id_text(id));
  }
  std::vector<std::string> normalized;
  for (const auto& attribute : attributes) {
    normalized.push_back(normalize_label(attribute, "attribute"));
  }
  it->second.attributes.insert(normalized.begin(), normalized.end());
}

void GraphBuilder::add_edge(NodeId source, NodeId target,
                            std::string_view predicate) {
  for (NodeId end : {source, target}) {
    if (!graph_.contains(end)) {
      throw GraphError(GraphError::Kind::kUnknownId,
                       "edge endpoint " + id_text(end) + " does not exist");
    }
  }
  graph_.edges_.insert(
      Edge{source, target, normalize_label(predicate, "predicate")});
}

std::string render_context(const SceneGraph& graph) {
  if (graph.empty()) return std::string(kEmptyContext);
  std::ostringstream out;
  out << kNodesHeader;
  for (const auto& [id, node] : graph.nodes()) {
    out << '\n' << id.value << ": " << node.name;
    if (!node.attributes.empty()) {
      out << " (";
      bool first = true;
      for (const auto& attribute : node.attributes) {
        if (!first) out << ", ";
        out << attribute;
        first = false;
      }
      out << ')';
    }
  }
  out << '\n' << kEdgesHeader;
  for (const auto& edge : graph.edges()) {
    out << '\n'
        << edge.source.value << " -> " << edge.target.value << ": "
        << edge.predicate;
  }
  return out.str();
}

std::string render_context(const SceneGraph& graph, const IdMap& id_map) {
  return render_context(graph.relabeled(id_map));
}

SceneGraph parse_context(std::string_view text, std::string scene_id) {
  if (text.ends_with('\n')) text.remove_suffix(1);
  if (text == kEmptyContext) return SceneGraph().with_scene_id(scene_id);

  enum class Section { kNone, kNodes, kEdges };
  Section section = Section::kNone;
  bool seen_nodes = false;
  bool seen_edges = false;
  GraphBuilder builder;
  builder.set_scene_id(std::move(scene_id));

  const auto lines = split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::size_t line_no = i + 1;
    const std::string_view line = lines[i];
    auto fail = [line_no](const std::string& why) -> ParseError {
      return ParseError(line_no, "line " + std::to_string(line_no) + ": " + why);
    };

    if (line == kNodesHeader) {
      if (seen_nodes || seen_edges) throw fail("unexpected Nodes: header");
      seen_nodes = true;
      section = Section::kNodes;
      continue;
    }
    if (line == kEdgesHeader) {
      if (seen_edges) throw fail("duplicate Edges: header");
      seen_edges = true;
      section = Section::kEdges;
      continue;
    }

    try {
      if (section == Section::kNodes) {
        const std::size_t colon = line.find(": ");
        if (colon == std::string_view::npos) throw fail("malformed node line");
        const auto id = parse_uint(line.substr(0, colon));
        if (!id) throw fail("node id is not a non-negative integer");
        std::string_view rest = line.substr(colon + 2);
        std::vector<std::string> attributes;
        const std::size_t open = rest.find(" (");
        if (open != std::string_view::npos) {
          if (!rest.ends_with(')')) throw fail("unterminated attribute list");
          std::string_view list =
              rest.substr(open + 2, rest.size() - open - 3);
          rest = rest.substr(0, open);
          std::size_t start = 0;
          while (true) {
            const std::size_t comma = list.find(", ", start);
            attributes.emplace_back(list.substr(start, comma - start));
            if (comma == std::string_view::npos) break;
            start = comma + 2;
          }
        }
        if (builder.contains(NodeId{*id})) {
          throw fail("duplicate node id " + std::to_string(*id));
        }
        builder.add_node(NodeId{*id}, rest, attributes);
      } else if (section == Section::kEdges) {
        const std::size_t arrow = line.find(" -> ");
        const std::size_t colon =
            arrow == std::string_view::npos ? arrow : line.find(": ", arrow);
        if (colon == std::string_view::npos) throw fail("malformed edge line");
        const auto source = parse_uint(line.substr(0, arrow));
        const auto target = parse_uint(line.substr(arrow + 4, colon - arrow - 4));
        if (!source || !target) throw fail("edge endpoint is not an integer");
        const std::string_view predicate = line.substr(colon + 2);
        for (auto end : {*source, *target}) {
          if (!builder.contains(NodeId{end})) {
            throw fail("dangling edge endpoint " + std::to_string(end));
          }
        }
        const std::size_t before = builder.peek().edges().size();
        builder.add_edge(NodeId{*source}, NodeId{*target}, predicate);
        if (builder.peek().edges().size() == before) {
          throw fail("duplicate edge");
        }
      } else {
        throw fail("expected Nodes: or Edges: header");
      }
    } catch (const GraphError& e) {
      throw fail(e.what());
    }
  }
  if (!seen_nodes && !seen_edges) throw ParseError(1, "line 1: empty context text");
  if (builder.peek().empty()) {
    throw ParseError(1, "line 1: a context without nodes must read 'Empty Context'");
  }
  return std::move(builder).build();
}

IdMap random_id_assignment(const SceneGraph& graph, std::uint64_t seed) {
  std::vector<std::uint64_t> targets(graph.nodes().size());
  for (std::size_t i = 0; i < targets.size(); ++i) targets[i] = i;
  Rng rng(seed);
  rng.shuffle(targets);
  IdMap map;
  std::size_t i = 0;
  for (const auto& [id, node] : graph.nodes()) map[id] = NodeId{targets[i++]};
  return map;
}

namespace {

std::optional<std::string> first_superset_violation(const SceneGraph& smaller,
                                                    const SceneGraph& larger) {
  for (const auto& [id, node] : smaller.nodes()) {
    const Node* other = larger.find(id);
    if (other == nullptr) return "node " + id_text(id) + " is missing";
    if (other->name != node.name) {
      return "node " + id_text(id) + " renamed from '" + node.name + "' to '" +
             other->name + "'";
    }
    for (const auto& attribute : node.attributes) {
      if (!other->attributes.count(attribute)) {
        return "node " + id_text(id) + " lost attribute '" + attribute + "'";
      }
    }
  }
  for (const auto& edge : smaller.edges()) {
    if (!larger.edges().count(edge)) {
      return "edge " + id_text(edge.source) + " -> " + id_text(edge.target) +
             ": " + edge.predicate + " is missing";
    }
  }
  return std::nullopt;
}

}  // namespace

bool is_additive_superset(const SceneGraph& smaller, const SceneGraph& larger) {
  return !first_superset_violation(smaller, larger).has_value();
}

void require_additive_superset(const SceneGraph& smaller,
                               const SceneGraph& larger,
                               std::string_view what) {
  if (auto violation = first_superset_violation(smaller, larger)) {
    throw NonMonotonicUpdate(std::string(what) + ": " + *violation);
  }
}

nlohmann::json to_json(const SceneGraph& graph) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& [id, node] : graph.nodes()) {
    nlohmann::json record = {
        {"id", id.value},
        {"name", node.name},
        {"attributes", std::vector<std::string>(node.attributes.begin(),
                                                node.attributes.end())}};
    if (node.bbox) {
      record["bbox"] = {node.bbox->x, node.bbox->y, node.bbox->width,
                        node.bbox->height};
    }
    nodes.push_back(std::move(record));
  }
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& edge : graph.edges()) {
    edges.push_back({{"source", edge.source.value},
                     {"target", edge.target.value},
                     {"predicate", edge.predicate}});
  }
  return {{"scene_id", graph.scene_id()}, {"nodes", nodes}, {"edges", edges}};
}

SceneGraph scene_graph_from_json(const nlohmann::json& record) {
  if (!record.is_object()) throw InvalidArgument("scene graph must be an object");
  GraphBuilder builder;
  builder.set_scene_id(record.value("scene_id", std::string()));
  const auto& nodes = record.at("nodes");
  if (!nodes.is_array()) throw InvalidArgument("'nodes' must be an array");
  for (const auto& node : nodes) {
    std::optional<BoundingBox> bbox;
    if (auto it = node.find("bbox"); it != node.end() && !it->is_null()) {
      if (!it->is_array() || it->size() != 4) {
        throw InvalidArgument("'bbox' must be [x, y, w, h]");
      }
      bbox = BoundingBox{(*it)[0].get<double>(), (*it)[1].get<double>(),
                         (*it)[2].get<double>(), (*it)[3].get<double>()};
    }
    builder.add_node(
        NodeId{node.at("id").get<std::uint64_t>()},
        node.at("name").get<std::string>(),
        node.value("attributes", std::vector<std::string>{}), bbox);
  }
  if (auto it = record.find("edges"); it != record.end()) {
    for (const auto& edge : *it) {
      builder.add_edge(NodeId{edge.at("source").get<std::uint64_t>()},
                       NodeId{edge.at("target").get<std::uint64_t>()},
                       edge.at("predicate").get<std::string>());
    }
  }
  return std::move(builder).build();
}

std::vector<SceneGraph> read_scene_graphs(std::istream& in) {
  std::vector<SceneGraph> graphs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (normalize_text(line).empty()) continue;
    try {
      graphs.push_back(scene_graph_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError(line_no, e.what());
    } catch (const Error& e) {
      throw SchemaError(line_no, e.what());
    }
  }
  return graphs;
}

void write_scene_graphs(std::ostream& out,
                        const std::vector<SceneGraph>& graphs) {
  for (const auto& graph : graphs) out << to_json(graph).dump() << '\n';
}

}  // namespace spice
