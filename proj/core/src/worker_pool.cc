/**
 *  Copyright (c) 2026 by Contributors
 * @file worker_pool.cc
 */
#include "hfg/worker_pool.h"

#include <algorithm>
#include <exception>

#include "hfg/log.h"

namespace hfg {

const char* stage_name(StageId s) {
  switch (s) {
    case StageId::Schedule: return "schedule";
    case StageId::NeighborSample: return "sample";
    case StageId::CpuFeatureCopy: return "cpu_copy";
    case StageId::DeviceFeatureCopy: return "device_copy";
    case StageId::Compact: return "compact";
    case StageId::Train: return "train";
    case StageId::Update: return "update";
  }
  return "unknown";
}

bool PriorityWorkerPool::Later::operator()(const Entry& a, const Entry& b) const {
  // True when `a` should be served after `b`.
  if (a.job.stage != b.job.stage) return a.job.stage < b.job.stage;
  if (a.job.seq_no != b.job.seq_no) return a.job.seq_no > b.job.seq_no;
  return a.ticket > b.ticket;
}

std::size_t PriorityWorkerPool::default_threads() {
  const std::size_t hw = std::thread::hardware_concurrency();
  return hw > 4 ? hw - 2 : 2;
}

PriorityWorkerPool::PriorityWorkerPool(std::size_t threads) {
  threads = std::max<std::size_t>(1, threads);
  threads_.reserve(threads);
  for (std::size_t i = 0; i < threads; ++i) threads_.emplace_back([this] { run(); });
}

PriorityWorkerPool::~PriorityWorkerPool() { shutdown(); }

void PriorityWorkerPool::submit(StageJob job) {
  {
    std::lock_guard lk(mu_);
    ++queued_per_stage_[static_cast<std::size_t>(job.stage)];
    queue_.push(Entry{std::move(job), next_ticket_++});
  }
  cv_.notify_one();
}

void PriorityWorkerPool::run() {
  for (;;) {
    StageJob job;
    {
      std::unique_lock lk(mu_);
      cv_.wait(lk, [&] { return !queue_.empty() || stopping_; });
      if (queue_.empty()) return;
      job = std::move(const_cast<Entry&>(queue_.top()).job);
      queue_.pop();
      if (tracing_) {
        StageId highest = job.stage;
        for (std::size_t s = kNumStages; s-- > 0;) {
          if (queued_per_stage_[s] > 0) {
            highest = static_cast<StageId>(s);
            break;
          }
        }
        trace_.push_back({job.stage, job.seq_no, highest});
      }
      --queued_per_stage_[static_cast<std::size_t>(job.stage)];
      ++running_;
    }
    try {
      job.fn();
    } catch (const std::exception& e) {
      log::error(std::string("worker job failed: ") + e.what());
    }
    {
      std::lock_guard lk(mu_);
      --running_;
      if (running_ == 0 && queue_.empty()) idle_cv_.notify_all();
    }
  }
}

void PriorityWorkerPool::wait_idle() {
  std::unique_lock lk(mu_);
  idle_cv_.wait(lk, [&] { return running_ == 0 && queue_.empty(); });
}

void PriorityWorkerPool::shutdown() {
  {
    std::lock_guard lk(mu_);
    if (stopping_) return;
    stopping_ = true;
  }
  cv_.notify_all();
  for (auto& t : threads_) {
    if (t.joinable()) t.join();
  }
}

void PriorityWorkerPool::enable_trace(bool on) {
  std::lock_guard lk(mu_);
  tracing_ = on;
}

std::vector<PoolTraceEvent> PriorityWorkerPool::trace() const {
  std::lock_guard lk(mu_);
  return trace_;
}

}  // namespace hfg
