#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <random>

#include "hfg/error.h"
#include "hfg/graph.h"
#include "hfg/graph_io.h"
#include "hfg/synth.h"
#include "support.h"

namespace hfg {
namespace {

HeteroSchema user_item() { return HeteroSchema({"user", "item"}, {{"user", "buys", "item"}}); }

TEST(Homogenize, ContiguousOffsetsPlaceItemsAfterUsers) {
  const std::vector<std::uint64_t> counts{3, 2};
  const std::vector<TypedEdgeList> edges{{{0, 0}, {2, 1}}};
  const HomogenizedGraph g = homogenize(user_item(), counts, edges);
  EXPECT_EQ(g.num_vertices(), 5u);
  EXPECT_EQ(g.num_edges(), 2u);
  const auto ends = g.edge_endpoints();
  EXPECT_EQ(ends[0], (std::pair<VertexId, VertexId>{0, 3}));
  EXPECT_EQ(ends[1], (std::pair<VertexId, VertexId>{2, 4}));
}

TEST(Homogenize, EmptyEdgeListsGiveZeroIndptr) {
  const std::vector<std::uint64_t> counts{3, 2};
  const std::vector<TypedEdgeList> edges{{}};
  const HomogenizedGraph g = homogenize(user_item(), counts, edges);
  EXPECT_EQ(g.num_vertices(), 5u);
  EXPECT_EQ(g.num_edges(), 0u);
  EXPECT_EQ(g.indptr(), std::vector<std::uint64_t>(6, 0));
}

TEST(Homogenize, OutOfRangeTypedIdNamesTheEdgeType) {
  const std::vector<std::uint64_t> counts{3, 2};
  const std::vector<TypedEdgeList> edges{{{0, 0}, {1, 2}}};
  try {
    homogenize(user_item(), counts, edges);
    FAIL() << "expected StructuralError";
  } catch (const StructuralError& e) {
    EXPECT_NE(std::string(e.what()).find("buys"), std::string::npos);
  }
}

TEST(Homogenize, RandomTypedGraphRoundTripsAndIsSorted) {
  const HeteroSchema schema({"a", "b"}, {{"a", "ab", "b"}, {"b", "ba", "a"}, {"a", "aa", "a"}});
  const std::vector<std::uint64_t> counts{30, 20};
  std::mt19937_64 rng(4);
  std::vector<TypedEdgeList> edges(3);
  for (int i = 0; i < 200; ++i) {
    const auto et = static_cast<std::size_t>(rng() % 3);
    const auto src_n = counts[schema.edge_src_type(static_cast<TypeId>(et))];
    const auto dst_n = counts[schema.edge_dst_type(static_cast<TypeId>(et))];
    edges[et].emplace_back(rng() % src_n, rng() % dst_n);
  }
  const HomogenizedGraph g = homogenize(schema, counts, edges);
  ASSERT_EQ(g.num_edges(), 200u);
  const auto ends = g.edge_endpoints();
  for (TypeId et = 0; et < 3; ++et) {
    for (std::size_t i = 0; i < edges[et].size(); ++i) {
      const EdgeId e = g.edge_offsets().begin(et) + i;
      EXPECT_EQ(g.edge_type(e), et);
      const TypedId s = g.to_typed(ends[e].first);
      const TypedId d = g.to_typed(ends[e].second);
      EXPECT_EQ(s.type, schema.edge_src_type(et));
      EXPECT_EQ(d.type, schema.edge_dst_type(et));
      EXPECT_EQ(s.id, edges[et][i].first);
      EXPECT_EQ(d.id, edges[et][i].second);
    }
  }
  for (VertexId v = 0; v < g.num_vertices(); ++v) {
    const auto ids = g.in_edge_ids(v);
    EXPECT_TRUE(std::is_sorted(ids.begin(), ids.end()));
  }
  auto sorted = g.edge_ids();
  std::sort(sorted.begin(), sorted.end());
  EXPECT_EQ(std::adjacent_find(sorted.begin(), sorted.end()), sorted.end());
}

TEST(Homogenize, DuplicateEdgesAreKept) {
  const HeteroSchema schema({"n"}, {{"n", "r", "n"}});
  const std::vector<std::uint64_t> counts{2};
  const std::vector<TypedEdgeList> edges{{{0, 1}, {0, 1}}};
  const HomogenizedGraph g = homogenize(schema, counts, edges);
  EXPECT_EQ(g.in_degree(1), 2u);
}

TEST(TypeOffsets, MapsBetweenTypedAndGlobal) {
  const std::vector<std::uint64_t> counts{3, 2};
  const TypeOffsets off(counts);
  EXPECT_EQ(off.to_global(1, 0), 3u);
  EXPECT_EQ(off.to_typed(4), (TypedId{1, 1}));
  for (std::uint64_t v = 0; v < 5; ++v) {
    const TypedId t = off.to_typed(v);
    EXPECT_EQ(off.to_global(t.type, t.id), v);
  }
  EXPECT_THROW(off.to_typed(5), RangeError);
  EXPECT_THROW(off.to_global(0, 3), RangeError);
  EXPECT_THROW(off.to_global(2, 0), RangeError);
}

TEST(TypeOffsets, TypesTileTheIdSpace) {
  const std::vector<std::uint64_t> counts{4, 0, 7, 1};
  const TypeOffsets off(counts);
  std::uint64_t next = 0;
  for (TypeId t = 0; t < 4; ++t) {
    for (std::uint64_t i = 0; i < counts[t]; ++i) EXPECT_EQ(off.to_global(t, i), next++);
  }
  EXPECT_EQ(next, off.total());
}

TEST(InNeighbors, FollowsCsrDefinition) {
  const HeteroSchema schema({"n"}, {{"n", "r", "n"}});
  const std::vector<std::uint64_t> counts{4};
  const std::vector<TypedEdgeList> edges{{{0, 1}, {2, 1}, {0, 2}, {1, 2}, {3, 2}}};
  const HomogenizedGraph g = homogenize(schema, counts, edges);
  EXPECT_TRUE(g.in_neighbors(0).empty());
  ASSERT_EQ(g.indptr()[2], 2u);
  ASSERT_EQ(g.indptr()[3], 5u);
  const auto nb = g.in_neighbors(2);
  ASSERT_EQ(nb.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(nb[i].src, g.indices()[2 + i]);
    EXPECT_EQ(nb[i].edge, g.edge_ids()[2 + i]);
  }
  std::uint64_t total = 0;
  for (VertexId v = 0; v < 4; ++v) total += g.in_neighbors(v).size();
  EXPECT_EQ(total, g.num_edges());
  EXPECT_THROW(g.in_neighbors(4), RangeError);
}

TEST(HeteroSchema, RejectsDuplicatesAndUnknownTypes) {
  EXPECT_THROW(HeteroSchema({"a", "a"}, {}), StructuralError);
  EXPECT_THROW(HeteroSchema({"a"}, {{"a", "r", "b"}}), StructuralError);
  EXPECT_THROW(HeteroSchema({"a"}, {{"a", "r", "a"}, {"a", "r", "a"}}), StructuralError);
}

TEST(GraphIo, MinimalDatasetLoads) {
  const auto dir = testing::temp_dir("minimal");
  Dataset d;
  d.schema = HeteroSchema({"n"}, {{"n", "r", "n"}});
  d.vertex_counts = {2};
  const std::vector<TypedEdgeList> edges{{{0, 1}}};
  d.graph = homogenize(d.schema, d.vertex_counts, edges);
  d.vertex_features.resize(1);
  d.edge_features.resize(1);
  save_dataset(dir, d);
  const Dataset back = load_graph(dir);
  EXPECT_EQ(back.graph.num_vertices(), 2u);
  EXPECT_EQ(back.graph.num_edges(), 1u);
  EXPECT_FALSE(back.vertex_features[0].has_value());
}

TEST(GraphIo, FeatureRowCountMismatchIsStructuralError) {
  const auto dir = testing::temp_dir("badrows");
  SynthSpec s;
  s.vertex_counts = {20};
  s.feat_dim = 4;
  save_dataset(dir, generate_planted(s));
  FeatureMatrix wrong("node", 19, 4);
  write_feature_file(dir / "feat_node.bin", wrong);
  EXPECT_THROW(load_graph(dir), StructuralError);
}

TEST(GraphIo, MissingOrCorruptFilesAreIoErrors) {
  const auto dir = testing::temp_dir("corrupt");
  EXPECT_THROW(load_graph(dir), IoError);
  SynthSpec s;
  s.vertex_counts = {20};
  s.feat_dim = 4;
  save_dataset(dir, generate_planted(s));
  {
    std::ofstream f(dir / "feat_node.bin", std::ios::binary | std::ios::trunc);
    f << "XXXX0000000000000000";
  }
  try {
    load_graph(dir);
    FAIL() << "expected IoError";
  } catch (const IoError& e) {
    EXPECT_NE(e.path().find("feat_node.bin"), std::string::npos);
  }
}

TEST(GraphIo, SaveLoadRoundTripPreservesArrays) {
  const Dataset d = generate_planted(hetero_spec(600, 300, 100, 4, 6, 12));
  const auto a = testing::temp_dir("rt_a");
  const auto b = testing::temp_dir("rt_b");
  save_dataset(a, d);
  const Dataset first = load_graph(a);
  save_dataset(b, first);
  const Dataset second = load_graph(b);
  EXPECT_EQ(first.graph.num_vertices(), 1000u);
  for (const Dataset* x : {&first, &second}) {
    EXPECT_EQ(x->graph.indptr(), d.graph.indptr());
    EXPECT_EQ(x->graph.indices(), d.graph.indices());
    EXPECT_EQ(x->graph.edge_ids(), d.graph.edge_ids());
    EXPECT_EQ(x->graph.masks(), d.graph.masks());
    EXPECT_EQ(x->labels, d.labels);
    EXPECT_TRUE(x->schema == d.schema);
    for (std::size_t t = 0; t < d.vertex_features.size(); ++t) {
      ASSERT_EQ(x->vertex_features[t].has_value(), d.vertex_features[t].has_value());
      if (d.vertex_features[t]) EXPECT_EQ(x->vertex_features[t]->values, d.vertex_features[t]->values);
    }
  }
  for (const auto& entry : std::filesystem::directory_iterator(a)) {
    EXPECT_EQ(read_file(entry.path()), read_file(b / entry.path().filename())) << entry.path();
  }
}

TEST(Synth, FixedSeedIsDeterministic) {
  const auto a = testing::temp_dir("det_a");
  const auto b = testing::temp_dir("det_b");
  save_dataset(a, generate_planted(testing::two_type_spec(80, 40, 5, 3)));
  save_dataset(b, generate_planted(testing::two_type_spec(80, 40, 5, 3)));
  for (const auto& entry : std::filesystem::directory_iterator(a)) {
    EXPECT_EQ(read_file(entry.path()), read_file(b / entry.path().filename()));
  }
}

TEST(Synth, TwoCliquesHaveOneBridge) {
  const Dataset d = generate_two_cliques(8);
  EXPECT_EQ(d.graph.num_vertices(), 16u);
  EXPECT_EQ(d.graph.num_edges(), 2u * 28u + 1u);
  std::size_t crossing = 0;
  for (const auto& [s, t] : d.graph.edge_endpoints()) crossing += (s < 8) != (t < 8) ? 1 : 0;
  EXPECT_EQ(crossing, 1u);
}

}  // namespace
}  // namespace hfg
