#pragma once

#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "spice/scene_graph.h"

namespace spice {

struct AddNode {
  NodeId id;
  std::string name;
  std::vector<std::string> attributes;

  friend bool operator==(const AddNode&, const AddNode&) = default;
};

struct AddAttr {
  NodeId id;
  std::vector<std::string> attributes;  // never empty

  friend bool operator==(const AddAttr&, const AddAttr&) = default;
};

struct AddEdge {
  NodeId source;
  NodeId target;
  std::string predicate;

  friend bool operator==(const AddEdge&, const AddEdge&) = default;
};

using ParseOp = std::variant<AddNode, AddAttr, AddEdge>;

// A semantic parse: the update that turns one context into the next.
struct ParseProgram {
  std::vector<ParseOp> ops;

  bool empty() const { return ops.empty(); }
  friend bool operator==(const ParseProgram&, const ParseProgram&) = default;
};

// Parses newline- or semicolon-separated commands:
//   #ADD_NODE(id, name[, [a1, a2]])
//   #ADD_ATTR(id, [a1, ...])
//   #ADD_EDGE(src, tgt, predicate)
// Keywords are case-insensitive and whitespace is free. Labels come back
// normalized. Throws ParseError carrying the 1-based command index.
ParseProgram parse_program(std::string_view text);

// One command per line, in the syntax parse_program accepts.
std::string format_program(const ParseProgram& program);

// Applies `program` to `prior` in order and returns the updated context.
// Repeated attributes and edges are no-ops. Throws ExecutionError on a
// duplicate AddNode id or a reference to an id not yet present.
SceneGraph execute(const ParseProgram& program, const SceneGraph& prior);

// The reference parse from `prior` to `reference`: attribute additions on
// existing nodes, then new nodes with their attributes, then new edges,
// each in ascending id order. Throws NonMonotonicUpdate when `reference`
// does not extend `prior`.
ParseProgram canonicalize(const SceneGraph& prior, const SceneGraph& reference);

}  // namespace spice
