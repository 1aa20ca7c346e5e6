/**
 *  Copyright (c) 2026 by Contributors
 * @file hfg/node.h
 * @brief A machine of the cluster and an in-process cluster harness.
 *
 * A NodeServer hosts one partition: it serves SAMPLE_NEIGHBORS, PULL_DATA and
 * PUSH_DATA, rank 0 also coordinates collectives, and it runs the machine's
 * trainers as threads that share its KVStore, sampler, worker pool and RPC
 * client.
 */
#ifndef HFG_NODE_H_
#define HFG_NODE_H_

#include <chrono>
#include <filesystem>
#include <memory>
#include <optional>
#include <vector>

#include "hfg/collective.h"
#include "hfg/dist_sampler.h"
#include "hfg/graph_io.h"
#include "hfg/kvstore.h"
#include "hfg/partition.h"
#include "hfg/pipeline.h"
#include "hfg/rpc.h"
#include "hfg/trainer.h"
#include "hfg/worker_pool.h"

namespace hfg {

struct NodeOptions {
  RpcServer::Options rpc;
  RpcClient::Options client;
  /// 0 picks PriorityWorkerPool::default_threads().
  std::size_t pool_threads = 0;
  /// How long connect() keeps retrying peers that are not up yet.
  std::chrono::milliseconds connect_wait{30000};
};

/// Where one trainer's mini-batches come from.
struct FeedOptions {
  FanoutPlan plan;
  std::size_t batch_size = 1000;
  std::uint64_t seed = 0;
  std::optional<std::size_t> max_batches;
  TaskKind task = TaskKind::Vertex;
  std::uint32_t num_negatives = 1;
  CapacityConfig capacities;
  /// Use SerialExecutor instead of the pipeline.
  bool reference_executor = false;
  std::chrono::microseconds device_latency{0};
  bool record_occupancy = false;
  /// Replaces the trainer's training targets (vertex task only).
  std::optional<std::vector<VertexId>> targets;
};

class NodeServer;

/// A trainer's scheduler plus its pipeline (or the serial executor).
class TrainerFeed : public BatchSource {
 public:
  TrainerFeed(NodeServer& node, std::uint32_t trainer, FeedOptions opts);
  ~TrainerFeed() override;

  MiniBatch next_minibatch() override;
  void stop();

  /// Null when running serially.
  Pipeline* pipeline() { return pipeline_.get(); }
  std::size_t batches_per_epoch() const { return scheduler_->batches_per_epoch(); }
  std::size_t num_targets() const { return num_targets_; }

 private:
  std::unique_ptr<BatchScheduler> scheduler_;
  std::vector<std::pair<VertexId, VertexId>> positives_;
  std::size_t num_targets_ = 0;
  std::unique_ptr<Pipeline> pipeline_;
  std::unique_ptr<SerialExecutor> serial_;
};

struct NodeRunOptions {
  TrainConfig train;
  CapacityConfig capacities;
  /// Use SerialExecutor instead of the pipeline.
  bool reference_executor = false;
  std::chrono::microseconds device_latency{0};
  /// Pull batches without training; measures generation throughput.
  bool generate_only = false;
  /// Train accuracy (vertex) or hit rate (link) after every epoch.
  bool evaluate = false;
  /// Per-trainer stage CSVs go here when set.
  std::filesystem::path metrics_dir;
  std::uint32_t group = 1;
  bool record_occupancy = false;
};

struct TrainerReport {
  std::uint32_t global_rank = 0;
  std::vector<StepLog> log;
  std::vector<double> epoch_scores;
  SageModel<float> model;
  std::uint64_t batches = 0;
  double wall_s = 0;
  double mean_input_nodes = 0;
  CapacityConfig max_observed{0, 0, 0};
  bool capacity_violated = false;
};

struct NodeReport {
  PartId rank = 0;
  std::vector<TrainerReport> trainers;
  std::uint64_t kv_local_bytes = 0;
  std::uint64_t kv_remote_bytes = 0;
};

class NodeServer {
 public:
  NodeServer(PartId rank, std::shared_ptr<const PartitionBook> book, PartitionShard shard,
             NodeOptions opts = {});
  ~NodeServer();
  NodeServer(const NodeServer&) = delete;
  NodeServer& operator=(const NodeServer&) = delete;

  /// Binds and starts serving. Throws TransportError.
  void start();
  Endpoint endpoint() const { return server_.endpoint(); }

  /// Creates the client over every member (self included), waits until all
  /// peers accept connections and passes a startup barrier.
  void connect(std::vector<Endpoint> members);

  /// Runs this machine's trainers to completion. Every node of the cluster
  /// must call it with the same options.
  NodeReport run(const NodeRunOptions& opts);

  /// Asks every other member to drain and shut down, then stops this one.
  void shutdown_cluster();
  /// Blocks until a SHUTDOWN request arrives.
  void wait() { server_.wait(); }
  void stop();

  PartId rank() const { return rank_; }
  std::uint32_t num_machines() const { return book_->num_partitions(); }
  std::uint32_t trainers_per_machine() const { return book_->trainers_per_machine; }
  const PartitionBook& book() const { return *book_; }
  const PhysicalPartition& partition() const { return *local_; }
  KVStore& kvstore() { return kv_; }
  DistSampler& sampler() { return sampler_; }
  PriorityWorkerPool& pool() { return pool_; }
  RpcClient* client() { return client_.get(); }
  const std::vector<std::string>& vertex_type_names() const { return type_names_; }
  /// Common feature width of every vertex type. Throws ConfigError when the
  /// widths differ or a type has none.
  std::uint32_t feat_dim() const;

  /// Owned training vertices of sub-partition `trainer`, ascending.
  std::vector<VertexId> train_targets(std::uint32_t trainer) const;
  /// Owned edges whose destination is one of train_targets(trainer), as
  /// (src, dst) in edge ID order.
  std::vector<std::pair<VertexId, VertexId>> train_edges(std::uint32_t trainer) const;

 private:
  TrainerReport run_trainer(std::uint32_t t, const NodeRunOptions& opts);

  PartId rank_;
  std::shared_ptr<const PartitionBook> book_;
  std::shared_ptr<const PhysicalPartition> local_;
  NodeOptions opts_;
  std::vector<std::string> type_names_;
  PriorityWorkerPool pool_;
  KVStore kv_;
  DistSampler sampler_;
  std::unique_ptr<CollectiveCoordinator> coordinator_;
  RpcServer server_;
  std::unique_ptr<RpcClient> client_;
  /// All machines, used for startup and end-of-run barriers.
  std::unique_ptr<CollectiveGroup> machines_;
  bool stopped_ = false;
};

/// Per-trainer scheduling seed.
std::uint64_t trainer_seed(std::uint64_t seed, std::uint32_t global_rank);

/// Every machine of a partitioned dataset in one process on ephemeral
/// localhost ports.
class LocalCluster {
 public:
  LocalCluster(const Dataset& data, std::shared_ptr<const PartitionBook> book, NodeOptions opts = {});
  ~LocalCluster();

  std::size_t size() const { return nodes_.size(); }
  NodeServer& node(PartId k) { return *nodes_.at(k); }
  /// Runs every node concurrently; rethrows the first failure.
  std::vector<NodeReport> run(NodeRunOptions opts);
  void shutdown();

 private:
  std::vector<std::unique_ptr<NodeServer>> nodes_;
  std::uint32_t next_group_ = 1;
};

}  // namespace hfg

#endif  // HFG_NODE_H_
