#include "spice/scene_graph.h"

#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "spice/errors.h"
#include "test_graphs.h"

namespace spice {
namespace {

SceneGraph table_and_chair() {
  return SceneGraph("s", {{NodeId{0}, "table", {"blue"}, {}}, {NodeId{1}, "chair", {}, {}}},
                    {{NodeId{1}, NodeId{0}, "near"}});
}

TEST(NormalizeTest, LowercasesTrimsAndCollapses) {
  EXPECT_EQ(normalize_text("  Blue   Table \t"), "blue table");
  EXPECT_EQ(normalize_text(""), "");
  EXPECT_THROW(normalize_label("   ", "name"), GraphError);
  EXPECT_THROW(normalize_label("a, b", "name"), GraphError);
  EXPECT_THROW(normalize_label("cup (red)", "name"), GraphError);
  EXPECT_THROW(normalize_label("x;y", "name"), GraphError);
}

TEST(SceneGraphTest, ConstructionNormalizesAndDedupes) {
  SceneGraph g("s", {{NodeId{4}, "  Big  Dog ", {"Brown", "brown ", "FURRY"}, {}}}, {});
  const Node* dog = g.find(NodeId{4});
  ASSERT_NE(dog, nullptr);
  EXPECT_EQ(dog->name, "big dog");
  EXPECT_EQ(dog->attributes, (std::set<std::string>{"brown", "furry"}));
}

TEST(SceneGraphTest, RejectsInvalidConstruction) {
  EXPECT_THROW(SceneGraph("s", {{NodeId{0}, "a", {}, {}}, {NodeId{0}, "b", {}, {}}}, {}),
               GraphError);
  EXPECT_THROW(SceneGraph("s", {{NodeId{0}, "a", {}, {}}}, {{NodeId{0}, NodeId{7}, "on"}}),
               GraphError);
  EXPECT_THROW(SceneGraph("s", {{NodeId{0}, "a", {}, BoundingBox{0, 0, 0, 3}}}, {}),
               GraphError);
}

TEST(RenderContextTest, EmptyGraph) {
  EXPECT_EQ(render_context(SceneGraph()), "Empty Context");
}

TEST(RenderContextTest, GoldenLayout) {
  EXPECT_EQ(render_context(table_and_chair()),
            "Nodes:\n0: table (blue)\n1: chair\nEdges:\n1 -> 0: near");
}

TEST(RenderContextTest, IdMapReordersLines) {
  const IdMap map = {{NodeId{0}, NodeId{5}}, {NodeId{1}, NodeId{2}}};
  EXPECT_EQ(render_context(table_and_chair(), map),
            "Nodes:\n2: chair\n5: table (blue)\nEdges:\n2 -> 5: near");
}

TEST(RenderContextTest, RejectsNonBijection) {
  EXPECT_THROW(render_context(table_and_chair(), {{NodeId{0}, NodeId{1}}}),
               InvalidArgument);
  EXPECT_THROW(render_context(table_and_chair(),
                              {{NodeId{0}, NodeId{3}}, {NodeId{1}, NodeId{3}}}),
               InvalidArgument);
  EXPECT_THROW(render_context(table_and_chair(),
                              {{NodeId{0}, NodeId{3}}, {NodeId{9}, NodeId{4}}}),
               InvalidArgument);
}

TEST(RenderContextTest, AttributesSortedLexicographically) {
  SceneGraph g("s", {{NodeId{3}, "table", {"wooden", "blue", "old"}, {}}}, {});
  EXPECT_EQ(render_context(g), "Nodes:\n3: table (blue, old, wooden)\nEdges:");
}

TEST(ParseContextTest, EmptyContext) {
  EXPECT_TRUE(parse_context("Empty Context").empty());
}

TEST(ParseContextTest, ParsesGolden) {
  EXPECT_EQ(parse_context("Nodes:\n0: table (blue)\n1: chair\nEdges:\n1 -> 0: near", "s"),
            table_and_chair());
}

TEST(ParseContextTest, DanglingEndpointNamesLine) {
  try {
    parse_context("Edges:\n1 -> 0: near");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.location(), 2u);
    EXPECT_NE(std::string(e.what()).find("dangling"), std::string::npos);
  }
}

TEST(ParseContextTest, MalformedLines) {
  auto line_of = [](std::string_view text) -> std::size_t {
    try {
      parse_context(text);
    } catch (const ParseError& e) {
      return e.location();
    }
    return 0;
  };
  EXPECT_EQ(line_of("Nodes:\n0: a\n0: b\nEdges:"), 3u);
  EXPECT_EQ(line_of("Nodes:\nx: a\nEdges:"), 2u);
  EXPECT_EQ(line_of("Nodes:\n0: a (red\nEdges:"), 2u);
  EXPECT_EQ(line_of("0: a"), 1u);
  EXPECT_EQ(line_of("Nodes:\n0: a\nEdges:\n0 => 0: on"), 4u);
  EXPECT_EQ(line_of(""), 1u);
}

TEST(ParseContextTest, RoundTripProperty) {
  Rng rng(11);
  for (int i = 0; i < 300; ++i) {
    const SceneGraph g = testing::random_graph(rng).with_scene_id("");
    const std::string text = render_context(g);
    const SceneGraph parsed = parse_context(text);
    EXPECT_EQ(parsed, g);
    EXPECT_EQ(render_context(parsed), text);
  }
}

TEST(RandomIdAssignmentTest, EmptyGraphGivesEmptyMap) {
  EXPECT_TRUE(random_id_assignment(SceneGraph(), 3).empty());
}

TEST(RandomIdAssignmentTest, DeterministicPermutation) {
  SceneGraph g("s", {{NodeId{10}, "a", {}, {}}, {NodeId{20}, "b", {}, {}},
                     {NodeId{30}, "c", {}, {}}}, {});
  const IdMap first = random_id_assignment(g, 42);
  EXPECT_EQ(first, random_id_assignment(g, 42));
  std::set<NodeId> images;
  for (const auto& [from, to] : first) {
    EXPECT_TRUE(g.contains(from));
    EXPECT_LT(to.value, 3u);
    images.insert(to);
  }
  EXPECT_EQ(images.size(), 3u);
  EXPECT_NO_THROW(render_context(g, first));
}

TEST(RandomIdAssignmentTest, DifferentSeedsUsuallyDiffer) {
  GraphBuilder b;
  for (std::uint64_t i = 0; i < 10; ++i) b.add_node(NodeId{i}, "n");
  const SceneGraph g = std::move(b).build();
  int differing = 0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    if (random_id_assignment(g, 2 * s) != random_id_assignment(g, 2 * s + 1)) {
      ++differing;
    }
  }
  EXPECT_GE(differing, 99);
}

TEST(AdditiveSupersetTest, DetectsViolations) {
  const SceneGraph base = table_and_chair();
  EXPECT_TRUE(is_additive_superset(SceneGraph(), base));
  EXPECT_TRUE(is_additive_superset(base, base));
  SceneGraph renamed("s", {{NodeId{0}, "desk", {"blue"}, {}}, {NodeId{1}, "chair", {}, {}}},
                     {{NodeId{1}, NodeId{0}, "near"}});
  EXPECT_FALSE(is_additive_superset(base, renamed));
  SceneGraph lost_attr("s", {{NodeId{0}, "table", {}, {}}, {NodeId{1}, "chair", {}, {}}},
                       {{NodeId{1}, NodeId{0}, "near"}});
  EXPECT_FALSE(is_additive_superset(base, lost_attr));
  EXPECT_TRUE(is_additive_superset(lost_attr, base));
  EXPECT_THROW(require_additive_superset(base, lost_attr, "x"), NonMonotonicUpdate);
}

TEST(SceneGraphJsonTest, RoundTripWithBoxes) {
  Rng rng(5);
  testing::GraphShape shape;
  shape.boxes = true;
  std::vector<SceneGraph> graphs;
  for (int i = 0; i < 20; ++i) graphs.push_back(testing::random_graph(rng, shape));
  std::stringstream buffer;
  write_scene_graphs(buffer, graphs);
  EXPECT_EQ(read_scene_graphs(buffer), graphs);
}

TEST(SceneGraphJsonTest, LoaderReportsLineNumber) {
  std::stringstream in(
      R"({"scene_id":"a","nodes":[{"id":0,"name":"x"}],"edges":[]})"
      "\n\n"
      R"({"scene_id":"b","nodes":[{"id":0,"name":"x"}],"edges":[{"source":0,"target":2,"predicate":"on"}]})"
      "\n");
  try {
    read_scene_graphs(in);
    FAIL() << "expected SchemaError";
  } catch (const SchemaError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  std::stringstream bad_json("{not json\n");
  EXPECT_THROW(read_scene_graphs(bad_json), SchemaError);
}

}  // namespace
}  // namespace spice
