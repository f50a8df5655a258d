#include "spice/formal_language.h"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <optional>
#include <sstream>

#include "spice/errors.h"

namespace spice {

namespace {

std::string_view trim(std::string_view text) {
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front())))
    text.remove_prefix(1);
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back())))
    text.remove_suffix(1);
  return text;
}

std::string upper(std::string_view text) {
  std::string out(text);
  for (auto& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

// One top-level argument: either a plain token or a bracketed list.
struct Argument {
  std::string_view text;
  bool is_list = false;
};

class CommandParser {
 public:
  explicit CommandParser(std::size_t index) : index_(index) {}

  ParseOp parse(std::string_view command) {
    if (!command.starts_with('#')) fail("command must start with '#'");
    const std::size_t open = command.find('(');
    if (open == std::string_view::npos || !command.ends_with(')')) {
      fail("expected KEYWORD(arguments)");
    }
    const std::string keyword = upper(trim(command.substr(1, open - 1)));
    const auto args = split_arguments(
        command.substr(open + 1, command.size() - open - 2));

    if (keyword == "ADD_NODE") {
      if (args.size() != 2 && args.size() != 3) {
        fail("ADD_NODE takes 2 or 3 arguments, got " + std::to_string(args.size()));
      }
      AddNode op{id(args[0]), label(args[1], "node name"), {}};
      if (args.size() == 3) op.attributes = list(args[2]);
      return op;
    }
    if (keyword == "ADD_ATTR") {
      if (args.size() != 2) {
        fail("ADD_ATTR takes 2 arguments, got " + std::to_string(args.size()));
      }
      AddAttr op{id(args[0]), list(args[1])};
      if (op.attributes.empty()) fail("ADD_ATTR needs at least one attribute");
      return op;
    }
    if (keyword == "ADD_EDGE") {
      if (args.size() != 3) {
        fail("ADD_EDGE takes 3 arguments, got " + std::to_string(args.size()));
      }
      return AddEdge{id(args[0]), id(args[1]), label(args[2], "predicate")};
    }
    fail("unknown command '#" + keyword + "'");
  }

 private:
  [[noreturn]] void fail(const std::string& why) const {
    throw ParseError(index_, "command " + std::to_string(index_) + ": " + why);
  }

  std::vector<Argument> split_arguments(std::string_view inner) const {
    std::vector<Argument> args;
    if (trim(inner).empty()) return args;
    std::size_t start = 0;
    int depth = 0;
    for (std::size_t i = 0; i <= inner.size(); ++i) {
      const char c = i < inner.size() ? inner[i] : ',';
      if (c == '[') {
        if (++depth > 1) fail("nested attribute list");
      } else if (c == ']') {
        if (--depth < 0) fail("unbalanced ']'");
      } else if (c == '(' || c == ')') {
        fail("unexpected parenthesis inside arguments");
      } else if (c == ',' && depth == 0) {
        const std::string_view piece = trim(inner.substr(start, i - start));
        Argument arg{piece, false};
        if (piece.starts_with('[')) {
          if (!piece.ends_with(']')) fail("malformed attribute list");
          arg.is_list = true;
        } else if (piece.find_first_of("[]") != std::string_view::npos) {
          fail("malformed attribute list");
        }
        args.push_back(arg);
        start = i + 1;
      }
    }
    if (depth != 0) fail("unterminated attribute list");
    return args;
  }

  NodeId id(const Argument& arg) const {
    std::uint64_t value = 0;
    const auto* end = arg.text.data() + arg.text.size();
    auto [ptr, ec] = std::from_chars(arg.text.data(), end, value);
    if (arg.is_list || arg.text.empty() || ec != std::errc() || ptr != end) {
      fail("'" + std::string(arg.text) + "' is not a node id");
    }
    return NodeId{value};
  }

  std::string label(const Argument& arg, std::string_view role) const {
    if (arg.is_list) fail(std::string(role) + " cannot be a list");
    try {
      return normalize_label(arg.text, role);
    } catch (const GraphError& e) {
      fail(e.what());
    }
  }

  std::vector<std::string> list(const Argument& arg) const {
    if (!arg.is_list) fail("expected a bracketed attribute list");
    const std::string_view inner = trim(arg.text.substr(1, arg.text.size() - 2));
    std::vector<std::string> items;
    if (inner.empty()) return items;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = inner.find(',', start);
      items.push_back(label({inner.substr(start, comma - start), false}, "attribute"));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    return items;
  }

  std::size_t index_;
};

void write_list(std::ostream& out, const std::vector<std::string>& items) {
  out << '[';
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out << ", ";
    out << items[i];
  }
  out << ']';
}

}  // namespace

ParseProgram parse_program(std::string_view text) {
  ParseProgram program;
  std::size_t index = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find_first_of("\n;", start);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view command = trim(text.substr(start, end - start));
    if (!command.empty()) {
      CommandParser parser(++index);
      program.ops.push_back(parser.parse(command));
    }
    start = end + 1;
  }
  return program;
}

std::string format_program(const ParseProgram& program) {
  std::ostringstream out;
  bool first = true;
  for (const auto& op : program.ops) {
    if (!first) out << '\n';
    first = false;
    std::visit(
        [&out](const auto& o) {
          using T = std::decay_t<decltype(o)>;
          if constexpr (std::is_same_v<T, AddNode>) {
            out << "#ADD_NODE(" << o.id.value << ", " << o.name;
            if (!o.attributes.empty()) {
              out << ", ";
              write_list(out, o.attributes);
            }
            out << ')';
          } else if constexpr (std::is_same_v<T, AddAttr>) {
            out << "#ADD_ATTR(" << o.id.value << ", ";
            write_list(out, o.attributes);
            out << ')';
          } else {
            out << "#ADD_EDGE(" << o.source.value << ", " << o.target.value
                << ", " << o.predicate << ')';
          }
        },
        op);
  }
  return out.str();
}

SceneGraph execute(const ParseProgram& program, const SceneGraph& prior) {
  GraphBuilder builder(prior);
  for (std::size_t i = 0; i < program.ops.size(); ++i) {
    try {
      std::visit(
          [&builder](const auto& o) {
            using T = std::decay_t<decltype(o)>;
            if constexpr (std::is_same_v<T, AddNode>) {
              builder.add_node(o.id, o.name, o.attributes);
            } else if constexpr (std::is_same_v<T, AddAttr>) {
              builder.add_attributes(o.id, o.attributes);
            } else {
              builder.add_edge(o.source, o.target, o.predicate);
            }
          },
          program.ops[i]);
    } catch (const GraphError& e) {
      throw ExecutionError(e.kind(), i,
                           "operation " + std::to_string(i + 1) + ": " + e.what());
    }
  }
  return std::move(builder).build();
}

ParseProgram canonicalize(const SceneGraph& prior, const SceneGraph& reference) {
  require_additive_superset(prior, reference, "reference does not extend prior");
  ParseProgram program;
  for (const auto& [id, node] : prior.nodes()) {
    const Node& updated = *reference.find(id);
    std::vector<std::string> added;
    std::set_difference(updated.attributes.begin(), updated.attributes.end(),
                        node.attributes.begin(), node.attributes.end(),
                        std::back_inserter(added));
    if (!added.empty()) program.ops.push_back(AddAttr{id, std::move(added)});
  }
  for (const auto& [id, node] : reference.nodes()) {
    if (prior.contains(id)) continue;
    program.ops.push_back(AddNode{
        id, node.name, {node.attributes.begin(), node.attributes.end()}});
  }
  for (const auto& edge : reference.edges()) {
    if (prior.edges().count(edge)) continue;
    program.ops.push_back(AddEdge{edge.source, edge.target, edge.predicate});
  }
  return program;
}

}  // namespace spice
