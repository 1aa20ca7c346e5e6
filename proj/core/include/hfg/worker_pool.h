/**
 *  Copyright (c) 2026 by Contributors
 * @file hfg/worker_pool.h
 * @brief Thread pool whose queue serves later pipeline stages first.
 */
#ifndef HFG_WORKER_POOL_H_
#define HFG_WORKER_POOL_H_

#include <condition_variable>
#include <cstdint>
#include <functional>
#include <mutex>
#include <queue>
#include <thread>
#include <vector>

namespace hfg {

enum class StageId : std::uint8_t {
  Schedule = 0,
  NeighborSample = 1,
  CpuFeatureCopy = 2,
  DeviceFeatureCopy = 3,
  Compact = 4,
  Train = 5,
  Update = 6,
};

inline constexpr std::size_t kNumStages = 7;
const char* stage_name(StageId s);

struct StageJob {
  StageId stage = StageId::Schedule;
  std::uint64_t seq_no = 0;
  std::function<void()> fn;
};

/// One dequeue decision, recorded when tracing is on.
struct PoolTraceEvent {
  StageId stage;
  std::uint64_t seq_no;
  /// Highest stage among all jobs queued at the moment of the decision,
  /// including the chosen one.
  StageId highest_queued;
};

/// Dequeues by (stage descending, seq_no ascending, submission order).
class PriorityWorkerPool {
 public:
  explicit PriorityWorkerPool(std::size_t threads = default_threads());
  ~PriorityWorkerPool();
  PriorityWorkerPool(const PriorityWorkerPool&) = delete;
  PriorityWorkerPool& operator=(const PriorityWorkerPool&) = delete;

  /// Available hardware parallelism minus the control and training threads,
  /// but never fewer than 2.
  static std::size_t default_threads();

  void submit(StageJob job);
  /// Blocks until the queue is empty and no job is running.
  void wait_idle();
  /// Runs every queued job, then joins the threads.
  void shutdown();

  std::size_t num_threads() const { return threads_.size(); }

  void enable_trace(bool on);
  std::vector<PoolTraceEvent> trace() const;

 private:
  struct Entry {
    StageJob job;
    std::uint64_t ticket;
  };
  struct Later {
    bool operator()(const Entry& a, const Entry& b) const;
  };

  void run();

  std::vector<std::thread> threads_;
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::condition_variable idle_cv_;
  std::priority_queue<Entry, std::vector<Entry>, Later> queue_;
  std::vector<std::size_t> queued_per_stage_ = std::vector<std::size_t>(kNumStages, 0);
  std::uint64_t next_ticket_ = 0;
  std::size_t running_ = 0;
  bool stopping_ = false;
  bool tracing_ = false;
  std::vector<PoolTraceEvent> trace_;
};

}  // namespace hfg

#endif  // HFG_WORKER_POOL_H_
