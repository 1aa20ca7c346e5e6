#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "hfg/error.h"
#include "hfg/rng.h"
#include "hfg/sampler.h"
#include "hfg/worker_pool.h"
#include "support.h"

namespace hfg {
namespace {

std::vector<std::uint64_t> iota_ids(std::uint64_t n) {
  std::vector<std::uint64_t> v(n);
  for (std::uint64_t i = 0; i < n; ++i) v[i] = i;
  return v;
}

// In-edges of vertex 0 from `degree` distinct sources of one relation.
HomogenizedGraph star(std::uint64_t degree) {
  HeteroSchema schema({"node"}, {{"node", "link", "node"}});
  const std::vector<std::uint64_t> counts{degree + 1};
  std::vector<TypedEdgeList> edges(1);
  for (std::uint64_t u = 1; u <= degree; ++u) edges[0].emplace_back(u, 0);
  return homogenize(schema, counts, edges);
}

PartitionBook book_from(std::vector<PartId> part_of, std::uint32_t k) {
  PartitionBook b;
  b.first_level.k = k;
  b.first_level.part_of = std::move(part_of);
  return b;
}

TEST(BatchScheduler, TenIdsInBatchesOfFour) {
  BatchScheduler s(iota_ids(10), 4, 1);
  EXPECT_EQ(s.batches_per_epoch(), 3u);
  std::vector<std::size_t> sizes;
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 3; ++i) {
    const auto item = s.next();
    EXPECT_EQ(item.seq_no, static_cast<std::uint64_t>(i));
    EXPECT_EQ(item.epoch, 0u);
    sizes.push_back(item.ids.size());
    seen.insert(item.ids.begin(), item.ids.end());
  }
  EXPECT_EQ(sizes, (std::vector<std::size_t>{4, 4, 2}));
  EXPECT_EQ(seen.size(), 10u);
  const auto next = s.next();
  EXPECT_EQ(next.seq_no, 3u);
  EXPECT_EQ(next.epoch, 1u);
}

TEST(BatchScheduler, FixedSeedIsDeterministic) {
  BatchScheduler a(iota_ids(50), 7, 99);
  BatchScheduler b(iota_ids(50), 7, 99);
  BatchScheduler c(iota_ids(50), 7, 100);
  bool differs = false;
  for (int i = 0; i < 20; ++i) {
    const auto x = a.next();
    EXPECT_EQ(x.ids, b.next().ids);
    differs = differs || x.ids != c.next().ids;
  }
  EXPECT_TRUE(differs);
}

TEST(BatchScheduler, FirstPositionIsUniform) {
  const auto ids = iota_ids(5);
  constexpr int kEpochs = 10000;
  std::vector<int> first(5, 0);
  for (int e = 0; e < kEpochs; ++e) {
    ++first[BatchScheduler::permutation(ids, BatchScheduler::epoch_seed(42, e))[0]];
  }
  const double sigma = std::sqrt(kEpochs * 0.2 * 0.8);
  for (int c : first) EXPECT_LE(std::abs(c - kEpochs * 0.2), 3 * sigma);
}

TEST(BatchScheduler, RejectsEmptySetAndZeroBatch) {
  EXPECT_THROW(BatchScheduler({}, 4, 1), ConfigError);
  EXPECT_THROW(BatchScheduler(iota_ids(3), 0, 1), ArgumentError);
}

TEST(BatchScheduler, MaxBatchesTruncatesEpochs) {
  BatchScheduler s(iota_ids(100), 10, 3, 2);
  EXPECT_EQ(s.batches_per_epoch(), 2u);
  s.next();
  s.next();
  EXPECT_EQ(s.next().epoch, 1u);
}

TEST(SampleOneHop, SmallDegreeReturnsEveryEdgeOnce) {
  const auto g = star(3);
  const VertexId seed = 0;
  const auto r = sample_one_hop(GraphAdjacency{g}, std::span(&seed, 1), 5, RngKey{1, 2}, 0);
  ASSERT_EQ(r.counts, (std::vector<std::uint32_t>{3}));
  std::multiset<VertexId> srcs;
  for (const auto& e : r.edges) {
    srcs.insert(e.src);
    EXPECT_EQ(e.dst, 0u);
  }
  EXPECT_EQ(srcs, (std::multiset<VertexId>{1, 2, 3}));
}

TEST(SampleOneHop, ZeroDegreeIsEmpty) {
  const auto g = star(3);
  const VertexId seed = 2;
  const auto r = sample_one_hop(GraphAdjacency{g}, std::span(&seed, 1), 5, RngKey{1, 2}, 0);
  EXPECT_EQ(r.counts, (std::vector<std::uint32_t>{0}));
  EXPECT_TRUE(r.edges.empty());
}

TEST(SampleOneHop, FanoutAppliesPerEdgeType) {
  HeteroSchema schema({"a"}, {{"a", "x", "a"}, {"a", "y", "a"}});
  const std::vector<std::uint64_t> counts{7};
  std::vector<TypedEdgeList> edges(2);
  for (std::uint64_t u = 1; u <= 3; ++u) edges[0].emplace_back(u, 0);
  for (std::uint64_t u = 4; u <= 6; ++u) edges[1].emplace_back(u, 0);
  const auto g = homogenize(schema, counts, edges);
  for (std::uint64_t s = 0; s < 200; ++s) {
    const VertexId seed = 0;
    const auto r = sample_one_hop(GraphAdjacency{g}, std::span(&seed, 1), 2, RngKey{s, 0}, 1);
    ASSERT_EQ(r.edges.size(), 4u);
    std::map<TypeId, int> per_type;
    std::set<EdgeId> distinct;
    for (const auto& e : r.edges) {
      ++per_type[g.edge_type(e.edge)];
      distinct.insert(e.edge);
    }
    EXPECT_EQ(per_type[0], 2);
    EXPECT_EQ(per_type[1], 2);
    EXPECT_EQ(distinct.size(), 4u);
  }
}

TEST(SampleOneHop, SameStreamSameSample) {
  const auto g = star(20);
  const VertexId seed = 0;
  const auto a = sample_one_hop(GraphAdjacency{g}, std::span(&seed, 1), 5, RngKey{9, 9}, 2);
  const auto b = sample_one_hop(GraphAdjacency{g}, std::span(&seed, 1), 5, RngKey{9, 9}, 2);
  EXPECT_EQ(a, b);
}

TEST(ChooseWithoutReplacement, AscendingDistinctInRange) {
  StreamRng rng({5});
  for (int i = 0; i < 500; ++i) {
    const auto n = static_cast<std::uint32_t>(1 + rng.uniform(30));
    const auto k = static_cast<std::uint32_t>(1 + rng.uniform(n));
    const auto c = choose_without_replacement(n, k, rng);
    ASSERT_EQ(c.size(), k);
    EXPECT_TRUE(std::is_sorted(c.begin(), c.end()));
    EXPECT_EQ(std::adjacent_find(c.begin(), c.end()), c.end());
    EXPECT_LT(c.back(), n);
  }
}

TEST(SplitLocalRemote, AllLocalIsOneSubset) {
  const PartitionBook b = book_from({0, 0, 1, 1}, 2);
  const std::vector<VertexId> seeds{1, 0};
  const auto s = split_local_remote(seeds, b);
  EXPECT_EQ(s.subsets[0], seeds);
  EXPECT_TRUE(s.subsets[1].empty());
}

TEST(SplitLocalRemote, PathRoutesEachSeedToItsOwner) {
  const PartitionBook b = book_from({0, 0, 0, 1, 1, 1}, 2);
  const std::vector<VertexId> seeds{5, 2, 3, 0};
  const auto s = split_local_remote(seeds, b);
  EXPECT_EQ(s.subsets[0], (std::vector<VertexId>{2, 0}));
  EXPECT_EQ(s.subsets[1], (std::vector<VertexId>{5, 3}));
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    const auto [p, idx] = s.route[i];
    EXPECT_EQ(p, b.owner(seeds[i]));
    EXPECT_EQ(s.subsets[p][idx], seeds[i]);
  }
}

TEST(SplitLocalRemote, PartitionOfUnionIsUnionOfPartitions) {
  StreamRng rng({12});
  for (int trial = 0; trial < 100; ++trial) {
    const auto k = static_cast<std::uint32_t>(1 + rng.uniform(6));
    std::vector<PartId> part(64);
    for (auto& p : part) p = static_cast<PartId>(rng.uniform(k));
    const PartitionBook b = book_from(part, k);
    std::vector<VertexId> a, c;
    for (std::uint64_t i = rng.uniform(20); i > 0; --i) a.push_back(rng.uniform(64));
    for (std::uint64_t i = rng.uniform(20); i > 0; --i) c.push_back(rng.uniform(64));
    std::vector<VertexId> ac = a;
    ac.insert(ac.end(), c.begin(), c.end());
    const auto sa = split_local_remote(a, b);
    const auto sc = split_local_remote(c, b);
    const auto sac = split_local_remote(ac, b);
    for (PartId p = 0; p < k; ++p) {
      std::vector<VertexId> joined = sa.subsets[p];
      joined.insert(joined.end(), sc.subsets[p].begin(), sc.subsets[p].end());
      EXPECT_EQ(sac.subsets[p], joined);
    }
  }
}

class TwoPartitions : public ::testing::Test {
 protected:
  TwoPartitions() : data_(generate_planted(testing::two_type_spec(120, 60, 4, 33))) {
    PartitionOptions po;
    po.machines = 2;
    po.seed = 6;
    book_ = partition_dataset(data_, po);
    shards_ = materialize_partitions(data_, book_);
  }

  std::vector<VertexId> some_seeds(std::uint64_t seed, std::size_t n) const {
    auto perm = BatchScheduler::permutation(iota_ids(data_.graph.num_vertices()), seed);
    perm.resize(n);
    return perm;
  }

  Dataset data_;
  PartitionBook book_;
  std::vector<PartitionShard> shards_;
};

TEST_F(TwoPartitions, StitchEqualsSingleMachineSample) {
  for (std::uint64_t trial = 0; trial < 30; ++trial) {
    const auto seeds = some_seeds(trial, 25);
    const RngKey key{trial, 3 * trial};
    const auto split = split_local_remote(seeds, book_);
    std::vector<std::optional<SampleResponse>> results(2);
    for (PartId p = 0; p < 2; ++p) {
      if (split.subsets[p].empty()) continue;
      results[p] = sample_one_hop(PartitionAdjacency{shards_[p].graph}, split.subsets[p], 3, key, 1);
    }
    const SampledBlock block = stitch(seeds, split, results, 1);
    const auto oracle = sample_one_hop(GraphAdjacency{data_.graph}, seeds, 3, key, 1);
    EXPECT_EQ(block.dsts, seeds);
    EXPECT_EQ(block.edges, oracle.edges);
    const std::set<VertexId> dst_set(seeds.begin(), seeds.end());
    for (const auto& e : block.edges) EXPECT_TRUE(dst_set.contains(e.dst));
  }
}

TEST_F(TwoPartitions, ForeignSeedIsOwnershipError) {
  VertexId foreign = 0;
  while (book_.owner(foreign) == 0) ++foreign;
  EXPECT_THROW(sample_one_hop(PartitionAdjacency{shards_[0].graph}, std::span(&foreign, 1), 3, RngKey{}, 0),
               OwnershipError);
}

TEST_F(TwoPartitions, MissingResultIsIncompleteBatch) {
  const auto seeds = some_seeds(1, 40);
  const auto split = split_local_remote(seeds, book_);
  ASSERT_FALSE(split.subsets[0].empty());
  ASSERT_FALSE(split.subsets[1].empty());
  std::vector<std::optional<SampleResponse>> results(2);
  results[0] = sample_one_hop(PartitionAdjacency{shards_[0].graph}, split.subsets[0], 3, RngKey{}, 0);
  EXPECT_THROW(stitch(seeds, split, results, 0), IncompleteBatchError);
}

TEST(Stitch, SinglePartitionIsIdentity) {
  const auto g = star(6);
  const std::vector<VertexId> seeds{0, 3};
  const PartitionBook b = book_from(std::vector<PartId>(7, 0), 1);
  const auto split = split_local_remote(seeds, b);
  const auto r = sample_one_hop(GraphAdjacency{g}, seeds, 2, RngKey{4, 4}, 0);
  const std::vector<std::optional<SampleResponse>> results{r};
  const SampledBlock block = stitch(seeds, split, results, 0);
  EXPECT_EQ(block.edges, r.edges);
  EXPECT_EQ(block.dsts, seeds);
}

TEST(Frontier, UniqueSortedUnionWithDestinations) {
  SampledBlock b;
  b.dsts = {1};
  b.edges = {{3, 1, 0}, {1, 1, 1}, {3, 1, 2}, {2, 1, 3}};
  EXPECT_EQ(compute_frontier(b), (std::vector<VertexId>{1, 2, 3}));
  SampledBlock empty;
  empty.dsts = {9, 4};
  EXPECT_EQ(compute_frontier(empty), (std::vector<VertexId>{4, 9}));
}

TEST(Frontier, BundledEqualsUnbundled) {
  StreamRng rng({31});
  std::vector<SampledBlock> blocks(40);
  for (auto& b : blocks) {
    for (std::uint64_t i = 1 + rng.uniform(5); i > 0; --i) b.dsts.push_back(rng.uniform(100));
    for (std::uint64_t i = rng.uniform(30); i > 0; --i) {
      b.edges.push_back({rng.uniform(100), b.dsts[rng.uniform(b.dsts.size())], rng.next()});
    }
  }
  std::vector<const SampledBlock*> ptrs;
  for (const auto& b : blocks) ptrs.push_back(&b);
  PriorityWorkerPool pool(3);
  const auto bundled = compute_frontier_bundled(ptrs, &pool);
  const auto inline_run = compute_frontier_bundled(ptrs, nullptr);
  ASSERT_EQ(bundled.size(), blocks.size());
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    EXPECT_EQ(bundled[i], compute_frontier(blocks[i]));
    EXPECT_EQ(inline_run[i], bundled[i]);
  }
}

TEST(Compact, SeedComesFirst) {
  const HomogenizedGraph g = star(1);
  RawMiniBatch raw;
  raw.target.seeds = {0};
  raw.blocks.resize(1);
  raw.blocks[0].dsts = {0};
  raw.blocks[0].edges = {{1, 0, 0}};
  raw.input_frontier = {0, 1};
  const auto c = compact(raw, g.edge_offsets());
  ASSERT_EQ(c.blocks.size(), 1u);
  EXPECT_EQ(c.blocks[0].src_nodes, (std::vector<VertexId>{0, 1}));
  EXPECT_EQ(c.blocks[0].num_dst, 1u);
  EXPECT_EQ(c.blocks[0].edge_src, (std::vector<std::uint32_t>{1}));
  EXPECT_EQ(c.blocks[0].edge_dst, (std::vector<std::uint32_t>{0}));
}

TEST(Compact, RelabelingIsBijectiveAndIsomorphic) {
  const Dataset d = generate_planted(testing::two_type_spec(200, 100, 3, 8));
  const auto all = iota_ids(d.graph.num_vertices());
  for (std::uint64_t trial = 0; trial < 40; ++trial) {
    TargetBatch t;
    t.seq_no = trial;
    t.epoch_seed = 17;
    auto perm = BatchScheduler::permutation(all, trial);
    t.seeds.assign(perm.begin(), perm.begin() + 12);
    const RawMiniBatch raw = sample_minibatch(d.graph, t, FanoutPlan{{4, 3, 2}});
    const CompactMiniBatch c = compact(raw, d.graph.edge_offsets());
    EXPECT_EQ(std::vector<VertexId>(c.blocks.back().src_nodes.begin(),
                                    c.blocks.back().src_nodes.begin() + t.seeds.size()),
              t.seeds);
    std::vector<VertexId> inputs = c.input_nodes();
    std::sort(inputs.begin(), inputs.end());
    EXPECT_EQ(inputs, raw.input_frontier);
    for (std::size_t l = 0; l < raw.blocks.size(); ++l) {
      const CompactBlock& cb = c.blocks[l];
      // Inverse map: distinct global IDs, one per local index.
      EXPECT_EQ(std::set<VertexId>(cb.src_nodes.begin(), cb.src_nodes.end()).size(), cb.src_nodes.size());
      std::multiset<std::tuple<VertexId, VertexId, EdgeId>> want, got;
      for (const auto& e : raw.blocks[l].edges) want.insert({e.src, e.dst, e.edge});
      for (std::size_t i = 0; i < cb.num_edges(); ++i) {
        ASSERT_LT(cb.edge_dst[i], cb.num_dst);
        got.insert({cb.src_nodes[cb.edge_src[i]], cb.src_nodes[cb.edge_dst[i]], cb.edge_ids[i]});
        EXPECT_EQ(cb.edge_types[i], d.graph.edge_type(cb.edge_ids[i]));
      }
      EXPECT_EQ(got, want);
      std::vector<VertexId> dsts(cb.src_nodes.begin(), cb.src_nodes.begin() + cb.num_dst);
      if (l + 1 < raw.blocks.size()) EXPECT_EQ(dsts, c.blocks[l + 1].src_nodes);
      std::sort(dsts.begin(), dsts.end());
      std::vector<VertexId> want_dsts = raw.blocks[l].dsts;
      std::sort(want_dsts.begin(), want_dsts.end());
      EXPECT_EQ(dsts, want_dsts);
    }
  }
}

TEST(Compact, InconsistentLayersAreStructuralErrors) {
  const Dataset d = generate_planted(testing::two_type_spec(60, 30, 3, 8));
  TargetBatch t;
  t.seeds = {0, 1, 2};
  RawMiniBatch raw = sample_minibatch(d.graph, t, FanoutPlan{{3, 3}});
  raw.blocks[0].dsts.push_back(d.graph.num_vertices() - 1);
  EXPECT_THROW(compact(raw, d.graph.edge_offsets()), StructuralError);
  RawMiniBatch none;
  EXPECT_THROW(compact(none, d.graph.edge_offsets()), StructuralError);
}

TEST(LinkTask, OnePositiveOneNegative) {
  const std::vector<std::uint64_t> counts{10, 5};
  const TypeOffsets offsets(counts);
  BatchScheduler::Item item{0, 0, 7, {0}};
  const std::vector<std::pair<VertexId, VertexId>> pos{{2, 12}};
  const TargetBatch t = make_link_task(item, pos, 1, offsets);
  EXPECT_EQ(t.kind, TaskKind::Link);
  EXPECT_EQ(t.positives.size() + t.negatives.size(), 2u);
  EXPECT_GE(t.seeds.size(), 2u);
  EXPECT_LE(t.seeds.size(), 3u);
  EXPECT_TRUE(std::is_sorted(t.seeds.begin(), t.seeds.end()));
  EXPECT_EQ(t.negatives[0].first, 2u);
  EXPECT_THROW(make_link_task(item, pos, 0, offsets), ArgumentError);
}

TEST(LinkTask, NegativesUniformOverDestinationType) {
  const std::vector<std::uint64_t> counts{10, 5};
  const TypeOffsets offsets(counts);
  const std::vector<std::pair<VertexId, VertexId>> pos{{2, 12}};
  constexpr int kTrials = 20000;
  std::vector<int> hits(5, 0);
  for (int i = 0; i < kTrials; ++i) {
    BatchScheduler::Item item{static_cast<std::uint64_t>(i), 0, 3, {0}};
    const TargetBatch t = make_link_task(item, pos, 2, offsets);
    ASSERT_EQ(t.negatives.size(), 2u);
    for (const auto& [s, dst] : t.negatives) {
      ASSERT_GE(dst, 10u);
      ASSERT_LT(dst, 15u);
      ++hits[dst - 10];
    }
  }
  const double n = 2.0 * kTrials;
  const double sigma = std::sqrt(n * 0.2 * 0.8);
  for (int h : hits) EXPECT_LE(std::abs(h - n * 0.2), 3 * sigma);
}

TEST(FanoutPlan, RejectsEmptyAndZero) {
  EXPECT_THROW(FanoutPlan{}.validate(), ArgumentError);
  EXPECT_THROW((FanoutPlan{{3, 0}}.validate()), ArgumentError);
  EXPECT_NO_THROW(FanoutPlan::full(2).validate());
}

}  // namespace
}  // namespace hfg
