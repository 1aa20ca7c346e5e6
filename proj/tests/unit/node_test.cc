#include <gtest/gtest.h>

#include <algorithm>

#include "hfg/error.h"
#include "hfg/node.h"
#include "support.h"

namespace hfg {
namespace {

Dataset convergence_graph() {
  SynthSpec s;
  s.vertex_counts = {200};
  s.clusters = 2;
  s.p_in = 0.08;
  s.p_out = 0.005;
  s.bidirectional = true;
  s.feat_dim = 8;
  s.feature_noise = 0.5;
  s.train_frac = 1.0;
  s.val_frac = 0;
  s.test_frac = 0;
  s.seed = 11;
  return generate_planted(s);
}

std::shared_ptr<const PartitionBook> book_for(const Dataset& d, std::uint32_t k, std::uint32_t t) {
  PartitionOptions po;
  po.machines = k;
  po.trainers_per_machine = t;
  po.seed = 3;
  return std::make_shared<const PartitionBook>(partition_dataset(d, po));
}

TrainConfig small_config() {
  TrainConfig c;
  c.layers = 2;
  c.hidden = 16;
  c.fanouts = {5, 5};
  c.batch_size = 20;
  c.lr = 0.5f;
  c.epochs = 3;
  c.seed = 5;
  return c;
}

TEST(LocalCluster, SingleMachineTrainsAndEvaluates) {
  const Dataset d = convergence_graph();
  LocalCluster cluster(d, book_for(d, 1, 1));
  NodeRunOptions o;
  o.train = small_config();
  o.evaluate = true;
  const auto reports = cluster.run(o);
  ASSERT_EQ(reports.size(), 1u);
  const auto& tr = reports[0].trainers.at(0);
  EXPECT_EQ(tr.log.size(), 3u * (200 / 20));
  EXPECT_EQ(tr.epoch_scores.size(), 3u);
  EXPECT_LT(tr.log.back().loss, tr.log.front().loss);
  EXPECT_FALSE(tr.capacity_violated);
}

TEST(LocalCluster, TrainersEndWithIdenticalModels) {
  const Dataset d = convergence_graph();
  LocalCluster cluster(d, book_for(d, 2, 2));
  NodeRunOptions o;
  o.train = small_config();
  o.train.epochs = 1;
  const auto reports = cluster.run(o);
  const SageModel<float>& ref = reports[0].trainers[0].model;
  for (const auto& r : reports) {
    for (const auto& t : r.trainers) EXPECT_TRUE(t.model == ref);
  }
  // Every trainer logs the same group-mean loss.
  for (const auto& r : reports) {
    for (const auto& t : r.trainers) {
      ASSERT_EQ(t.log.size(), reports[0].trainers[0].log.size());
      for (std::size_t i = 0; i < t.log.size(); ++i) EXPECT_EQ(t.log[i].loss, reports[0].trainers[0].log[i].loss);
    }
  }
  EXPECT_GT(reports[0].kv_remote_bytes + reports[1].kv_remote_bytes, 0u);
}

TEST(LocalCluster, ReferenceExecutorMatchesPipelineLosses) {
  const Dataset d = convergence_graph();
  LocalCluster cluster(d, book_for(d, 2, 1));
  NodeRunOptions o;
  o.train = small_config();
  o.train.epochs = 1;
  const auto a = cluster.run(o);
  o.reference_executor = true;
  const auto b = cluster.run(o);
  ASSERT_EQ(a[0].trainers[0].log.size(), b[0].trainers[0].log.size());
  for (std::size_t i = 0; i < a[0].trainers[0].log.size(); ++i) {
    EXPECT_EQ(a[0].trainers[0].log[i].loss, b[0].trainers[0].log[i].loss);
  }
  EXPECT_TRUE(a[1].trainers[0].model == b[1].trainers[0].model);
}

TEST(LocalCluster, BatchLargerThanEveryTrainerIsConfigError) {
  const Dataset d = convergence_graph();
  LocalCluster cluster(d, book_for(d, 1, 1));
  NodeRunOptions o;
  o.train = small_config();
  o.train.batch_size = 1000;
  EXPECT_THROW(cluster.run(o), ConfigError);
}

TEST(LocalCluster, LinkTaskRuns) {
  const Dataset d = convergence_graph();
  LocalCluster cluster(d, book_for(d, 2, 1));
  NodeRunOptions o;
  o.train = small_config();
  o.train.task = TaskKind::Link;
  o.train.batch_size = 50;
  o.train.epochs = 2;
  o.train.lr = 0.1f;
  o.evaluate = true;
  const auto reports = cluster.run(o);
  const auto& tr = reports[0].trainers[0];
  EXPECT_FALSE(tr.log.empty());
  EXPECT_EQ(tr.epoch_scores.size(), 2u);
  for (double s : tr.epoch_scores) {
    EXPECT_GE(s, 0.0);
    EXPECT_LE(s, 1.0);
  }
}

TEST(NodeServer, TrainTargetsAreOwnedTrainVerticesOfTheSubPartition) {
  const Dataset d = convergence_graph();
  auto book = book_for(d, 2, 2);
  LocalCluster cluster(d, book);
  std::uint64_t total = 0;
  for (PartId k = 0; k < 2; ++k) {
    for (std::uint32_t t = 0; t < 2; ++t) {
      const auto ids = cluster.node(k).train_targets(t);
      EXPECT_TRUE(std::is_sorted(ids.begin(), ids.end()));
      EXPECT_EQ(ids.size(), book->sub_train_counts[k * 2 + t]);
      for (VertexId v : ids) {
        EXPECT_EQ(book->owner(v), k);
        EXPECT_EQ(book->trainer_of(v), t);
        EXPECT_EQ(d.graph.mask(v), SplitMask::Train);
      }
      total += ids.size();
    }
  }
  EXPECT_EQ(total, 200u);
}

TEST(NodeServer, RunBeforeConnectIsStateError) {
  const Dataset d = convergence_graph();
  auto book = book_for(d, 1, 1);
  auto shards = materialize_partitions(d, *book);
  NodeServer node(0, book, std::move(shards[0]));
  node.start();
  NodeRunOptions o;
  o.train = small_config();
  EXPECT_THROW(node.run(o), StateError);
}

TEST(NodeServer, WrongMemberCountIsConfigError) {
  const Dataset d = convergence_graph();
  auto book = book_for(d, 2, 1);
  auto shards = materialize_partitions(d, *book);
  NodeServer node(0, book, std::move(shards[0]));
  node.start();
  EXPECT_THROW(node.connect({node.endpoint()}), ConfigError);
}

}  // namespace
}  // namespace hfg
