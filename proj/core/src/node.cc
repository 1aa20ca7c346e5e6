/**
 *  Copyright (c) 2026 by Contributors
 * @file node.cc
 */
#include "hfg/node.h"

#include <numeric>
#include <thread>

#include "hfg/error.h"
#include "hfg/log.h"
#include "hfg/rng.h"

namespace hfg {

namespace {

constexpr std::uint32_t kMachineGroup = 0;

/// Counts input nodes of every delivered batch.
class CountingSource : public BatchSource {
 public:
  explicit CountingSource(BatchSource& inner) : inner_(inner) {}
  MiniBatch next_minibatch() override {
    MiniBatch mb = inner_.next_minibatch();
    ++batches;
    input_nodes += mb.graph.input_nodes().size();
    return mb;
  }
  std::uint64_t batches = 0;
  std::uint64_t input_nodes = 0;

 private:
  BatchSource& inner_;
};

}  // namespace

std::uint64_t trainer_seed(std::uint64_t seed, std::uint32_t global_rank) {
  return mix64(seed ^ mix64(0x747261696EULL + global_rank));
}

TrainerFeed::TrainerFeed(NodeServer& node, std::uint32_t trainer, FeedOptions opts) {
  opts.plan.validate();
  const PartitionBook& book = node.book();
  std::vector<std::uint64_t> ids;
  if (opts.task == TaskKind::Vertex) {
    ids = opts.targets ? *opts.targets : node.train_targets(trainer);
  } else {
    positives_ = node.train_edges(trainer);
    ids.resize(positives_.size());
    std::iota(ids.begin(), ids.end(), 0);
  }
  num_targets_ = ids.size();
  if (ids.empty()) {
    throw ConfigError("trainer " + std::to_string(trainer) + " of machine " + std::to_string(node.rank()) +
                      " has no training targets");
  }
  scheduler_ = std::make_unique<BatchScheduler>(std::move(ids), opts.batch_size, opts.seed, opts.max_batches);

  TargetSource targets;
  if (opts.task == TaskKind::Vertex) {
    targets = [s = scheduler_.get()] { return make_vertex_task(s->next()); };
  } else {
    targets = [this, s = scheduler_.get(), n = opts.num_negatives, &book] {
      const auto item = s->next();
      std::vector<std::pair<VertexId, VertexId>> pos;
      pos.reserve(item.ids.size());
      for (auto i : item.ids) pos.push_back(positives_[i]);
      return make_link_task(item, pos, n, book.vertex_offsets);
    };
  }
  SampleFn sample = [&node, plan = opts.plan](TargetBatch t, std::function<void(std::exception_ptr, RawMiniBatch)> cb) {
    node.sampler().sample_async(std::move(t), plan, std::move(cb));
  };
  FeatureFn features = kvstore_features(node.kvstore(), book.vertex_offsets, node.vertex_type_names());
  const std::uint32_t dim = node.feat_dim();
  if (opts.reference_executor) {
    serial_ = std::make_unique<SerialExecutor>(dim, std::move(targets), std::move(sample), std::move(features),
                                               book.edge_offsets);
  } else {
    PipelineOptions po;
    po.capacities = opts.capacities;
    po.plan = opts.plan;
    po.feat_dim = dim;
    po.device_latency = opts.device_latency;
    po.record_occupancy = opts.record_occupancy;
    pipeline_ = std::make_unique<Pipeline>(std::move(po), std::move(targets), std::move(sample), std::move(features),
                                           node.pool(), book.edge_offsets);
    pipeline_->start();
  }
}

TrainerFeed::~TrainerFeed() { stop(); }

void TrainerFeed::stop() {
  if (pipeline_) pipeline_->stop();
}

MiniBatch TrainerFeed::next_minibatch() {
  return pipeline_ ? pipeline_->next_minibatch() : serial_->next_minibatch();
}

NodeServer::NodeServer(PartId rank, std::shared_ptr<const PartitionBook> book, PartitionShard shard,
                       NodeOptions opts)
    : rank_(rank),
      book_(std::move(book)),
      local_(std::make_shared<const PhysicalPartition>(std::move(shard.graph))),
      opts_(std::move(opts)),
      type_names_(book_->schema.vertex_types()),
      pool_(opts_.pool_threads ? opts_.pool_threads : PriorityWorkerPool::default_threads()),
      kv_(rank, book_, nullptr),
      sampler_(rank, book_, local_, nullptr, &pool_),
      server_(opts_.rpc) {
  if (rank_ >= book_->num_partitions()) {
    throw ConfigError("rank " + std::to_string(rank_) + " but the book has " +
                      std::to_string(book_->num_partitions()) + " partitions");
  }
  kv_.register_schema_spaces(shard);
  kv_.install(server_);
  sampler_.install(server_);
  if (rank_ == 0) {
    coordinator_ = std::make_unique<CollectiveCoordinator>();
    coordinator_->install(server_);
    server_.on_disconnect([c = coordinator_.get()](std::uint64_t conn) { c->connection_closed(conn); });
  }
}

NodeServer::~NodeServer() { stop(); }

void NodeServer::start() { server_.start(); }

void NodeServer::connect(std::vector<Endpoint> members) {
  if (members.size() != num_machines()) {
    throw ConfigError("cluster lists " + std::to_string(members.size()) + " members but the partition book has " +
                      std::to_string(num_machines()) + " machines");
  }
  client_ = std::make_unique<RpcClient>(std::move(members), opts_.client);
  const auto deadline = std::chrono::steady_clock::now() + opts_.connect_wait;
  for (std::uint32_t p = 0; p < client_->num_peers(); ++p) {
    for (;;) {
      try {
        client_->connect(p);
        break;
      } catch (const TransportError&) {
        if (std::chrono::steady_clock::now() >= deadline) throw;
        std::this_thread::sleep_for(std::chrono::milliseconds(50));
      }
    }
  }
  kv_.attach_client(client_.get());
  sampler_.attach_client(client_.get());
  machines_ = std::make_unique<CollectiveGroup>(*client_, 0, kMachineGroup, rank_, num_machines());
  machines_->barrier();
  log::debug("machine " + std::to_string(rank_) + " connected to " + std::to_string(num_machines()) + " members");
}

std::uint32_t NodeServer::feat_dim() const {
  const auto& dims = book_->vertex_feat_dims;
  if (dims.empty() || dims.size() != type_names_.size()) throw ConfigError("vertex feature widths are missing");
  for (std::size_t t = 0; t < dims.size(); ++t) {
    if (dims[t] == 0) throw ConfigError("vertex type '" + type_names_[t] + "' has no features");
    if (dims[t] != dims[0]) {
      throw ConfigError("vertex types have different feature widths (" + std::to_string(dims[0]) + " vs " +
                        std::to_string(dims[t]) + ")");
    }
  }
  return dims[0];
}

std::vector<VertexId> NodeServer::train_targets(std::uint32_t trainer) const {
  std::vector<VertexId> out;
  for (VertexId v : local_->core_vertices()) {
    if (local_->mask_of(v) == SplitMask::Train && book_->trainer_of(v) == trainer) out.push_back(v);
  }
  return out;
}

std::vector<std::pair<VertexId, VertexId>> NodeServer::train_edges(std::uint32_t trainer) const {
  std::vector<std::tuple<EdgeId, VertexId, VertexId>> edges;
  for (std::uint64_t l = 0; l < local_->num_core; ++l) {
    const VertexId dst = local_->to_global(l);
    if (local_->mask_of(dst) != SplitMask::Train || book_->trainer_of(dst) != trainer) continue;
    const auto srcs = local_->in_sources_local(l);
    const auto eids = local_->in_edge_ids_local(l);
    for (std::size_t i = 0; i < srcs.size(); ++i) edges.emplace_back(eids[i], local_->to_global(srcs[i]), dst);
  }
  std::sort(edges.begin(), edges.end());
  std::vector<std::pair<VertexId, VertexId>> out;
  out.reserve(edges.size());
  for (const auto& [e, s, d] : edges) out.emplace_back(s, d);
  return out;
}

TrainerReport NodeServer::run_trainer(std::uint32_t t, const NodeRunOptions& opts) {
  const TrainConfig& cfg = opts.train;
  const std::uint32_t T = trainers_per_machine();
  const std::uint32_t global = rank_ * T + t;
  const std::uint32_t size = num_machines() * T;
  CollectiveGroup group(*client_, 0, opts.group, global, size);

  std::vector<std::uint64_t> counts;
  if (cfg.task == TaskKind::Vertex) {
    counts = book_->sub_train_counts;
  } else {
    std::vector<float> mine(size, 0.0f);
    mine[global] = static_cast<float>(train_edges(t).size());
    const auto mean = group.allreduce_mean(mine);
    for (float m : mean) counts.push_back(static_cast<std::uint64_t>(std::llround(static_cast<double>(m) * size)));
  }
  const std::size_t steps = steps_per_epoch(counts, cfg.batch_size, cfg.max_steps_per_epoch);

  FeedOptions fo;
  fo.plan = cfg.plan();
  fo.batch_size = cfg.batch_size;
  fo.seed = trainer_seed(cfg.seed, global);
  fo.max_batches = steps;
  fo.task = cfg.task;
  fo.num_negatives = cfg.num_negatives;
  fo.capacities = opts.capacities;
  fo.reference_executor = opts.reference_executor;
  fo.device_latency = opts.device_latency;
  fo.record_occupancy = opts.record_occupancy;
  TrainerFeed feed(*this, t, fo);
  CountingSource counted(feed);

  TrainerReport report;
  report.global_rank = global;
  const auto start = std::chrono::steady_clock::now();
  if (opts.generate_only) {
    for (std::size_t i = 0; i < steps * cfg.epochs; ++i) counted.next_minibatch();
  } else {
    std::uint32_t out_dim = cfg.hidden;
    if (cfg.task == TaskKind::Vertex) {
      if (book_->num_classes == 0) throw ConfigError("vertex task needs labels; the dataset has no classes");
      out_dim = book_->num_classes;
    }
    Trainer trainer(cfg, SageModel<float>::init(cfg.dims(feat_dim(), out_dim), cfg.seed), &group,
                    [p = local_](VertexId v) { return p->label_of(v); });
    TrainLoopOptions lo;
    lo.steps_per_epoch = steps;
    lo.epochs = cfg.epochs;
    lo.pipeline = feed.pipeline();
    if (opts.evaluate) {
      lo.on_epoch = [&](std::uint64_t) {
        FeedOptions eo = fo;
        eo.plan = FanoutPlan::full(cfg.layers);
        eo.max_batches.reset();
        eo.reference_executor = true;
        TrainerFeed eval_feed(*this, t, eo);
        report.epoch_scores.push_back(evaluate(trainer, eval_feed, eval_feed.batches_per_epoch(), &group));
      };
    }
    report.log = train_loop(trainer, counted, lo);
    report.model = trainer.model();
  }
  report.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  feed.stop();
  report.batches = counted.batches;
  report.mean_input_nodes =
      counted.batches ? static_cast<double>(counted.input_nodes) / static_cast<double>(counted.batches) : 0.0;
  if (Pipeline* p = feed.pipeline()) {
    report.max_observed = p->max_observed();
    report.capacity_violated = p->capacity_violated();
    if (!opts.metrics_dir.empty()) {
      std::filesystem::create_directories(opts.metrics_dir);
      p->write_metrics_csv(opts.metrics_dir / ("stages_trainer" + std::to_string(global) + ".csv"));
    }
  }
  return report;
}

NodeReport NodeServer::run(const NodeRunOptions& opts) {
  if (!client_) throw StateError("connect() must precede run()");
  opts.train.validate();
  opts.capacities.validate();
  if (opts.group == kMachineGroup) throw ConfigError("collective group 0 is reserved");
  kv_.reset_counters();
  const std::uint32_t T = trainers_per_machine();
  std::vector<TrainerReport> reports(T);
  std::vector<std::exception_ptr> errors(T);
  std::vector<std::thread> threads;
  for (std::uint32_t t = 0; t < T; ++t) {
    threads.emplace_back([&, t] {
      try {
        reports[t] = run_trainer(t, opts);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : threads) th.join();
  for (std::uint32_t t = 0; t < T; ++t) {
    if (!errors[t]) continue;
    try {
      std::rethrow_exception(errors[t]);
    } catch (const Error& e) {
      log::error("machine " + std::to_string(rank_) + " trainer " + std::to_string(t) + ": " + e.what());
      throw;
    }
  }
  machines_->barrier();
  NodeReport out;
  out.rank = rank_;
  out.trainers = std::move(reports);
  out.kv_local_bytes = kv_.local_bytes();
  out.kv_remote_bytes = kv_.remote_bytes();
  return out;
}

void NodeServer::shutdown_cluster() {
  if (client_) {
    for (std::uint32_t p = 0; p < client_->num_peers(); ++p) {
      if (p == rank_) continue;
      try {
        client_->call(p, Verb::Shutdown, {});
      } catch (const std::exception& e) {
        log::warn("shutdown of machine " + std::to_string(p) + " failed: " + e.what());
      }
    }
  }
  stop();
}

void NodeServer::stop() {
  if (stopped_) return;
  stopped_ = true;
  machines_.reset();
  server_.stop();
  if (client_) client_->close();
  pool_.shutdown();
}

LocalCluster::LocalCluster(const Dataset& data, std::shared_ptr<const PartitionBook> book, NodeOptions opts) {
  auto shards = materialize_partitions(data, *book);
  for (PartId k = 0; k < shards.size(); ++k) {
    nodes_.push_back(std::make_unique<NodeServer>(k, book, std::move(shards[k]), opts));
    nodes_.back()->start();
  }
  std::vector<Endpoint> members;
  for (const auto& n : nodes_) members.push_back(n->endpoint());
  std::vector<std::exception_ptr> errors(nodes_.size());
  std::vector<std::thread> threads;
  for (std::size_t k = 0; k < nodes_.size(); ++k) {
    threads.emplace_back([&, k] {
      try {
        nodes_[k]->connect(members);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    });
  }
  for (auto& th : threads) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

LocalCluster::~LocalCluster() { shutdown(); }

std::vector<NodeReport> LocalCluster::run(NodeRunOptions opts) {
  opts.group = next_group_++;
  std::vector<NodeReport> reports(nodes_.size());
  std::vector<std::exception_ptr> errors(nodes_.size());
  std::vector<std::thread> threads;
  for (std::size_t k = 0; k < nodes_.size(); ++k) {
    threads.emplace_back([&, k] {
      try {
        reports[k] = nodes_[k]->run(opts);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    });
  }
  for (auto& th : threads) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return reports;
}

void LocalCluster::shutdown() {
  for (auto& n : nodes_) n->stop();
}

}  // namespace hfg
