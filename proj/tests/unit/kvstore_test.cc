#include <gtest/gtest.h>

#include "hfg/error.h"
#include "hfg/kvstore.h"
#include "hfg/node.h"
#include "hfg/rng.h"
#include "support.h"

namespace hfg {
namespace {

std::vector<float> oracle_gather(const FeatureMatrix& m, std::span<const std::uint64_t> ids) {
  std::vector<float> out;
  for (auto id : ids) {
    const auto r = m.row(id);
    out.insert(out.end(), r.begin(), r.end());
  }
  return out;
}

class ThreeMachines : public ::testing::Test {
 protected:
  ThreeMachines() : data_(generate_planted(testing::two_type_spec(150, 90, 5, 17))) {
    PartitionOptions po;
    po.machines = 3;
    po.seed = 4;
    book_ = std::make_shared<const PartitionBook>(partition_dataset(data_, po));
    cluster_ = std::make_unique<LocalCluster>(data_, book_);
  }

  Dataset data_;
  std::shared_ptr<const PartitionBook> book_;
  std::unique_ptr<LocalCluster> cluster_;
};

TEST_F(ThreeMachines, OneSpacePerTypeAndRelation) {
  KVStore& kv = cluster_->node(0).kvstore();
  EXPECT_EQ(kv.num_spaces(), data_.schema.num_vertex_types() + data_.schema.num_edge_types());
  EXPECT_TRUE(kv.has_space("paper"));
  EXPECT_TRUE(kv.has_space("author"));
  EXPECT_TRUE(kv.has_space("cites"));
  EXPECT_EQ(kv.space("paper").width, 5u);
}

TEST_F(ThreeMachines, DuplicateRegistrationIsConfigError) {
  KVStore& kv = cluster_->node(0).kvstore();
  EXPECT_THROW(kv.register_space(kv.space("paper"), std::nullopt), ConfigError);
}

TEST_F(ThreeMachines, MixedPullEqualsUnshardedGather) {
  StreamRng rng({8});
  for (PartId k = 0; k < 3; ++k) {
    KVStore& kv = cluster_->node(k).kvstore();
    for (TypeId t = 0; t < 2; ++t) {
      const std::string name = data_.schema.vertex_types()[t];
      std::vector<std::uint64_t> ids;
      for (int i = 0; i < 60; ++i) ids.push_back(rng.uniform(data_.vertex_counts[t]));
      EXPECT_EQ(kv.pull(name, ids), oracle_gather(*data_.vertex_features[t], ids));
      for (auto id : ids) EXPECT_EQ(kv.owner(kv.space(name), id), book_->owner(data_.graph.to_global(t, id)));
    }
  }
}

TEST_F(ThreeMachines, PullIsLinearOverConcatenation) {
  KVStore& kv = cluster_->node(1).kvstore();
  const std::vector<std::uint64_t> a{0, 5, 149, 3};
  const std::vector<std::uint64_t> b{77, 77, 12};
  std::vector<std::uint64_t> ab = a;
  ab.insert(ab.end(), b.begin(), b.end());
  auto left = kv.pull("paper", a);
  const auto right = kv.pull("paper", b);
  left.insert(left.end(), right.begin(), right.end());
  EXPECT_EQ(kv.pull("paper", ab), left);
}

TEST_F(ThreeMachines, DuplicatedIdGivesIdenticalRows) {
  const std::vector<std::uint64_t> ids{7, 7};
  const auto rows = cluster_->node(0).kvstore().pull("paper", ids);
  ASSERT_EQ(rows.size(), 10u);
  EXPECT_TRUE(std::equal(rows.begin(), rows.begin() + 5, rows.begin() + 5));
}

TEST_F(ThreeMachines, PushToRemoteRowsIsVisibleFromAThirdNode) {
  std::vector<std::uint64_t> remote;
  for (std::uint64_t id = 0; id < 150 && remote.size() < 4; ++id) {
    if (book_->owner(data_.graph.to_global(0, id)) == 1) remote.push_back(id);
  }
  ASSERT_FALSE(remote.empty());
  std::vector<float> rows(remote.size() * 5);
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = 1000.0f + static_cast<float>(i);
  cluster_->node(0).kvstore().push("paper", remote, rows);
  EXPECT_EQ(cluster_->node(2).kvstore().pull("paper", remote), rows);
  EXPECT_EQ(cluster_->node(1).kvstore().local_gather("paper", remote), rows);
}

TEST_F(ThreeMachines, ZeroLengthPushIsNoOp) {
  EXPECT_NO_THROW(cluster_->node(0).kvstore().push("paper", {}, {}));
}

TEST_F(ThreeMachines, OutOfRangeIdIsRangeError) {
  const std::vector<std::uint64_t> ids{150};
  EXPECT_THROW(cluster_->node(0).kvstore().pull("paper", ids), RangeError);
  EXPECT_THROW(cluster_->node(0).kvstore().pull("nosuch", ids), ArgumentError);
}

TEST_F(ThreeMachines, LocalGatherMatchesPullAndRejectsForeignIds) {
  KVStore& kv = cluster_->node(2).kvstore();
  const auto owned = owned_typed_vertices(*book_, 2, 1);
  ASSERT_GE(owned.size(), 2u);
  const std::vector<std::uint64_t> ids{owned[1], owned[0]};
  EXPECT_EQ(kv.local_gather("author", ids), kv.pull("author", ids));
  std::uint64_t foreign = 0;
  while (book_->owner(data_.graph.to_global(1, foreign)) == 2) ++foreign;
  const std::vector<std::uint64_t> bad{foreign};
  EXPECT_THROW(kv.local_gather("author", bad), OwnershipError);
}

TEST_F(ThreeMachines, ShardsTileEachSpace) {
  for (TypeId t = 0; t < 2; ++t) {
    std::vector<int> seen(data_.vertex_counts[t], 0);
    for (PartId k = 0; k < 3; ++k) {
      for (auto id : owned_typed_vertices(*book_, k, t)) ++seen[id];
    }
    for (int s : seen) EXPECT_EQ(s, 1);
  }
}

TEST_F(ThreeMachines, SmallRpcCapSplitsRemotePulls) {
  KVStore& kv = cluster_->node(0).kvstore();
  kv.set_max_rpc_bytes(64);
  std::vector<std::uint64_t> ids(150);
  for (std::uint64_t i = 0; i < 150; ++i) ids[i] = 149 - i;
  EXPECT_EQ(kv.pull("paper", ids), oracle_gather(*data_.vertex_features[0], ids));
}

TEST(KVShard, GatherOwnedInterval) {
  IdSpace s{"x", false, 0, 20, 2};
  std::vector<std::uint64_t> owned(10);
  std::vector<float> rows(20);
  for (std::uint64_t i = 0; i < 10; ++i) {
    owned[i] = i;
    rows[2 * i] = float(i);
    rows[2 * i + 1] = -float(i);
  }
  KVShard shard(s, owned, rows);
  const std::vector<std::uint64_t> ids{3, 5};
  const std::vector<std::uint64_t> slots{0, 1};
  std::vector<float> out(4);
  shard.gather(ids, out.data(), slots);
  EXPECT_EQ(out, (std::vector<float>{3, -3, 5, -5}));
  const std::vector<std::uint64_t> foreign{12};
  const std::vector<std::uint64_t> one{0};
  EXPECT_THROW(shard.gather(foreign, out.data(), one), OwnershipError);
  EXPECT_EQ(shard.intervals().size(), 1u);
}

TEST(KVStore, SingleMachinePushThenPull) {
  const Dataset d = generate_planted(testing::two_type_spec(40, 20, 3, 2));
  auto book = std::make_shared<const PartitionBook>(partition_dataset(d, PartitionOptions{}));
  auto shards = materialize_partitions(d, *book);
  KVStore kv(0, book, nullptr);
  kv.register_schema_spaces(shards[0]);
  const std::vector<std::uint64_t> ids{4, 9};
  const std::vector<float> rows{1, 2, 3, 4, 5, 6};
  kv.push("paper", ids, rows);
  EXPECT_EQ(kv.pull("paper", ids), rows);
  EXPECT_THROW(kv.push("paper", ids, std::vector<float>{1, 2}), ArgumentError);
}

}  // namespace
}  // namespace hfg
