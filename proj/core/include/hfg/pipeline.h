/**
 *  Copyright (c) 2026 by Contributors
 * @file hfg/pipeline.h
 * @brief Asynchronous staged mini-batch generation.
 *
 * One control thread owns every capacity counter and issues stage jobs to a
 * PriorityWorkerPool; a single consumer thread takes finished batches with
 * next_minibatch(). Stage groups and what occupies them:
 *
 *   sample  from scheduling until the batch is admitted to the CPU copy
 *   cpu     from admission to CPU feature copy until admitted to the device
 *   device  from admission to the device stage until the consumer takes it
 *
 * Admission to the cpu and device groups happens in seq_no order, so delivery
 * order equals schedule order and results never depend on timing.
 */
#ifndef HFG_PIPELINE_H_
#define HFG_PIPELINE_H_

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "hfg/graph_io.h"
#include "hfg/kvstore.h"
#include "hfg/sampler.h"
#include "hfg/worker_pool.h"

namespace hfg {

struct CapacityConfig {
  std::uint32_t sample = 25;
  std::uint32_t cpu = 5;
  std::uint32_t device = 1;

  static CapacityConfig serial() { return {1, 1, 1}; }
  /// Parses "25,5,1". Throws ArgumentError.
  static CapacityConfig parse(const std::string& text);
  void validate() const;
  std::string str() const;
  friend bool operator==(const CapacityConfig&, const CapacityConfig&) = default;
};

/// A compacted mini-batch with its input features in input_nodes() order.
struct MiniBatch {
  CompactMiniBatch graph;
  std::uint32_t feat_dim = 0;
  std::vector<float> features;

  friend bool operator==(const MiniBatch&, const MiniBatch&) = default;
};

using DoneFn = std::function<void(std::exception_ptr)>;
/// Produces the next target batch; called from one thread, in order.
using TargetSource = std::function<TargetBatch()>;
using SampleFn = std::function<void(TargetBatch, std::function<void(std::exception_ptr, RawMiniBatch)>)>;
/// Writes the feature rows of `sorted_ids` (global vertex IDs) contiguously
/// into `out`, then calls done.
using FeatureFn = std::function<void(std::span<const VertexId> sorted_ids, float* out, DoneFn done)>;

/// FeatureFn over a KVStore: groups IDs by vertex type and pulls each
/// type's rows straight into their final positions.
FeatureFn kvstore_features(KVStore& store, const TypeOffsets& vertex_offsets,
                           std::vector<std::string> type_names);
/// FeatureFn over in-memory per-type matrices (single-machine reference).
FeatureFn dataset_features(const Dataset& data);

/// Device stage: compaction plus copying rows from frontier order into the
/// compacted input order.
MiniBatch stage_on_device(const RawMiniBatch& raw, std::span<const float> frontier_rows,
                          std::uint32_t feat_dim, const TypeOffsets& edge_offsets);

struct StageRecord {
  std::uint64_t seq_no;
  StageId stage;
  std::int64_t enqueue_us;
  std::int64_t start_us;
  std::int64_t end_us;
  std::uint64_t bytes;
};

struct Occupancy {
  std::int64_t t_us;
  std::uint32_t sample;
  std::uint32_t cpu;
  std::uint32_t device;
};

class BatchSource {
 public:
  virtual ~BatchSource() = default;
  /// Throws PipelineError carrying the failed seq_no.
  virtual MiniBatch next_minibatch() = 0;
};

struct PipelineOptions {
  CapacityConfig capacities;
  FanoutPlan plan;
  std::uint32_t feat_dim = 0;
  /// Extra time spent in the device stage per batch.
  std::chrono::microseconds device_latency{0};
  bool record_occupancy = false;
};

class Pipeline : public BatchSource {
 public:
  Pipeline(PipelineOptions opts, TargetSource targets, SampleFn sample, FeatureFn features,
           PriorityWorkerPool& pool, TypeOffsets edge_offsets);
  ~Pipeline() override;

  /// Starts the control thread. Throws StateError on a second call.
  void start();
  /// Blocks until the next batch in seq_no order is staged.
  MiniBatch next_minibatch() override;
  /// Stops issuing work and waits for in-flight jobs to finish.
  void stop();

  /// Appends an externally timed stage (train/update) to the metrics.
  void record_stage(std::uint64_t seq_no, StageId stage, std::chrono::steady_clock::time_point start,
                    std::chrono::steady_clock::time_point end, std::uint64_t bytes = 0);
  std::vector<StageRecord> metrics() const;
  void write_metrics_csv(const std::filesystem::path& path) const;
  std::vector<Occupancy> occupancy() const;
  /// Highest in-flight count observed per group.
  CapacityConfig max_observed() const;
  bool capacity_violated() const { return violated_.load(); }

 private:
  enum class Phase { Sampling, Sampled, CpuCopy, CpuDone, Device, Ready, Failed };
  struct Slot {
    Phase phase = Phase::Sampling;
    RawMiniBatch raw;
    std::vector<float> frontier_rows;
    std::optional<MiniBatch> staged;
    std::exception_ptr error;
    bool holds_device = false;
    /// Group the failed batch still occupies, released on in-order admission.
    int failed_group = -1;
  };

  void control_loop();
  void admit(std::vector<std::function<void()>>& actions);
  void note_occupancy();
  std::int64_t now_us() const;
  void record(StageRecord r);
  void op_begin();
  void op_end();

  PipelineOptions opts_;
  TargetSource targets_;
  SampleFn sample_;
  FeatureFn features_;
  PriorityWorkerPool& pool_;
  TypeOffsets edge_offsets_;
  std::chrono::steady_clock::time_point t0_;

  mutable std::mutex mu_;
  std::condition_variable control_cv_;
  std::condition_variable consumer_cv_;
  std::condition_variable ops_cv_;
  bool dirty_ = true;
  bool stopping_ = false;
  bool started_ = false;
  std::thread control_;
  std::map<std::uint64_t, Slot> slots_;
  std::uint64_t next_issue_ = 0;
  std::uint64_t next_cpu_ = 0;
  std::uint64_t next_device_ = 0;
  std::uint64_t next_deliver_ = 0;
  std::uint32_t in_sample_ = 0;
  std::uint32_t in_cpu_ = 0;
  std::uint32_t in_device_ = 0;
  std::size_t outstanding_ops_ = 0;
  CapacityConfig max_seen_{0, 0, 0};
  std::atomic<bool> violated_{false};
  std::vector<Occupancy> occupancy_;

  mutable std::mutex metrics_mu_;
  std::vector<StageRecord> metrics_;
};

/// Runs every stage back to back on the calling thread. The reference the
/// pipeline's output is compared against.
class SerialExecutor : public BatchSource {
 public:
  SerialExecutor(std::uint32_t feat_dim, TargetSource targets, SampleFn sample, FeatureFn features,
                 TypeOffsets edge_offsets);
  MiniBatch next_minibatch() override;

 private:
  std::uint32_t feat_dim_;
  TargetSource targets_;
  SampleFn sample_;
  FeatureFn features_;
  TypeOffsets edge_offsets_;
};

}  // namespace hfg

#endif  // HFG_PIPELINE_H_
