/**
 *  Copyright (c) 2026 by Contributors
 * @file pipeline.cc
 */
#include "hfg/pipeline.h"

#include <cassert>
#include <cstring>
#include <fstream>
#include <future>
#include <sstream>

#include "hfg/error.h"
#include "hfg/log.h"

namespace hfg {

namespace {

std::string describe(std::exception_ptr e) {
  try {
    std::rethrow_exception(e);
  } catch (const std::exception& ex) {
    return ex.what();
  } catch (...) {
    return "unknown error";
  }
}

}  // namespace

CapacityConfig CapacityConfig::parse(const std::string& text) {
  std::vector<std::uint32_t> vals;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const long v = std::stol(item, &used);
      if (used != item.size() || v < 1) throw std::invalid_argument(item);
      vals.push_back(static_cast<std::uint32_t>(v));
    } catch (const std::exception&) {
      throw ArgumentError("bad capacity '" + item + "' in '" + text + "'");
    }
  }
  if (vals.size() != 3) throw ArgumentError("capacities need three values: sample,cpu,device");
  return {vals[0], vals[1], vals[2]};
}

void CapacityConfig::validate() const {
  if (sample < 1 || cpu < 1 || device < 1) throw ArgumentError("stage capacities must be >= 1");
}

std::string CapacityConfig::str() const {
  return std::to_string(sample) + "," + std::to_string(cpu) + "," + std::to_string(device);
}

FeatureFn kvstore_features(KVStore& store, const TypeOffsets& vertex_offsets,
                           std::vector<std::string> type_names) {
  return [&store, vertex_offsets, names = std::move(type_names)](std::span<const VertexId> ids,
                                                                 float* out, DoneFn done) {
    const std::size_t types = vertex_offsets.num_types();
    std::vector<std::vector<std::uint64_t>> typed(types);
    std::vector<std::vector<std::uint64_t>> rows(types);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const TypeId t = vertex_offsets.type_of(ids[i]);
      typed[t].push_back(ids[i] - vertex_offsets.begin(t));
      rows[t].push_back(i);
    }
    struct Join {
      std::mutex mu;
      std::size_t remaining = 1;
      std::exception_ptr error;
      DoneFn done;
      void finish(std::exception_ptr e) {
        bool last;
        {
          std::lock_guard lk(mu);
          if (e && !error) error = e;
          last = --remaining == 0;
        }
        if (last) done(error);
      }
    };
    auto join = std::make_shared<Join>();
    join->done = std::move(done);
    for (std::size_t t = 0; t < types; ++t) join->remaining += typed[t].empty() ? 0 : 1;
    for (std::size_t t = 0; t < types; ++t) {
      if (typed[t].empty()) continue;
      try {
        store.pull_async(names.at(t), typed[t], out, rows[t],
                         [join](std::exception_ptr e) { join->finish(e); });
      } catch (...) {
        join->finish(std::current_exception());
      }
    }
    join->finish(nullptr);
  };
}

FeatureFn dataset_features(const Dataset& data) {
  return [&data](std::span<const VertexId> ids, float* out, DoneFn done) {
    try {
      const auto& vo = data.graph.vertex_offsets();
      for (std::size_t i = 0; i < ids.size(); ++i) {
        const auto [t, local] = vo.to_typed(ids[i]);
        const auto& fm = data.vertex_features.at(t);
        if (!fm) throw StructuralError("vertex type " + std::to_string(t) + " has no features");
        const auto row = fm->row(local);
        std::memcpy(out + i * row.size(), row.data(), row.size_bytes());
      }
    } catch (...) {
      done(std::current_exception());
      return;
    }
    done(nullptr);
  };
}

MiniBatch stage_on_device(const RawMiniBatch& raw, std::span<const float> frontier_rows,
                          std::uint32_t feat_dim, const TypeOffsets& edge_offsets) {
  if (frontier_rows.size() != raw.input_frontier.size() * feat_dim) {
    throw StructuralError("gathered rows do not match the input frontier");
  }
  MiniBatch mb;
  mb.graph = compact(raw, edge_offsets);
  mb.feat_dim = feat_dim;
  const auto& nodes = mb.graph.input_nodes();
  const auto pos = frontier_positions(raw.input_frontier, nodes);
  mb.features.resize(nodes.size() * feat_dim);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    std::memcpy(mb.features.data() + i * feat_dim, frontier_rows.data() + pos[i] * feat_dim,
                feat_dim * sizeof(float));
  }
  return mb;
}

Pipeline::Pipeline(PipelineOptions opts, TargetSource targets, SampleFn sample, FeatureFn features,
                   PriorityWorkerPool& pool, TypeOffsets edge_offsets)
    : opts_(std::move(opts)),
      targets_(std::move(targets)),
      sample_(std::move(sample)),
      features_(std::move(features)),
      pool_(pool),
      edge_offsets_(std::move(edge_offsets)),
      t0_(std::chrono::steady_clock::now()) {
  opts_.capacities.validate();
  opts_.plan.validate();
}

Pipeline::~Pipeline() { stop(); }

std::int64_t Pipeline::now_us() const {
  return std::chrono::duration_cast<std::chrono::microseconds>(std::chrono::steady_clock::now() - t0_)
      .count();
}

void Pipeline::start() {
  std::lock_guard lk(mu_);
  if (started_) throw StateError("pipeline already started");
  started_ = true;
  t0_ = std::chrono::steady_clock::now();
  control_ = std::thread([this] { control_loop(); });
}

void Pipeline::op_begin() { ++outstanding_ops_; }

void Pipeline::op_end() {
  if (--outstanding_ops_ == 0) ops_cv_.notify_all();
}

void Pipeline::record(StageRecord r) {
  std::lock_guard lk(metrics_mu_);
  metrics_.push_back(r);
}

void Pipeline::record_stage(std::uint64_t seq_no, StageId stage,
                            std::chrono::steady_clock::time_point start,
                            std::chrono::steady_clock::time_point end, std::uint64_t bytes) {
  auto us = [&](auto t) {
    return std::chrono::duration_cast<std::chrono::microseconds>(t - t0_).count();
  };
  record({seq_no, stage, us(start), us(start), us(end), bytes});
}

void Pipeline::control_loop() {
  std::unique_lock lk(mu_);
  for (;;) {
    control_cv_.wait(lk, [&] { return dirty_ || stopping_; });
    if (stopping_) break;
    dirty_ = false;
    std::vector<std::function<void()>> actions;
    admit(actions);
    lk.unlock();
    for (auto& a : actions) a();
    lk.lock();
  }
}

void Pipeline::admit(std::vector<std::function<void()>>& actions) {
  const CapacityConfig& cap = opts_.capacities;

  // Schedule + sample: keep the group full.
  while (in_sample_ < cap.sample) {
    const std::uint64_t seq = next_issue_++;
    slots_[seq];
    ++in_sample_;
    op_begin();
    actions.push_back([this, seq] {
      const std::int64_t t_sched = now_us();
      TargetBatch target;
      try {
        target = targets_();
        if (target.seq_no != seq) throw StateError("target source is out of step with the pipeline");
      } catch (...) {
        std::lock_guard lk(mu_);
        Slot& s = slots_.at(seq);
        s.phase = Phase::Failed;
        s.error = std::current_exception();
        s.failed_group = 0;
        dirty_ = true;
        control_cv_.notify_one();
        op_end();
        return;
      }
      const std::int64_t t_sample = now_us();
      record({seq, StageId::Schedule, t_sched, t_sched, t_sample, target.seeds.size() * sizeof(VertexId)});
      sample_(std::move(target), [this, seq, t_sample](std::exception_ptr err, RawMiniBatch raw) {
        std::uint64_t bytes = 0;
        for (const auto& b : raw.blocks) bytes += b.edges.size() * sizeof(SampledEdge);
        record({seq, StageId::NeighborSample, t_sample, t_sample, now_us(), bytes});
        std::lock_guard lk(mu_);
        Slot& s = slots_.at(seq);
        if (err) {
          s.phase = Phase::Failed;
          s.error = err;
          s.failed_group = 0;
        } else {
          s.phase = Phase::Sampled;
          s.raw = std::move(raw);
        }
        dirty_ = true;
        control_cv_.notify_one();
        op_end();
      });
    });
  }

  // CPU feature copy, admitted in seq order.
  while (next_cpu_ < next_issue_) {
    const std::uint64_t seq = next_cpu_;
    Slot& s = slots_.at(seq);
    if (s.phase == Phase::Failed) {
      if (s.failed_group == 0) --in_sample_;
      s.failed_group = -1;
      ++next_cpu_;
      continue;
    }
    if (s.phase != Phase::Sampled || in_cpu_ >= cap.cpu) break;
    --in_sample_;
    ++in_cpu_;
    s.phase = Phase::CpuCopy;
    ++next_cpu_;
    op_begin();
    const std::int64_t t_enq = now_us();
    Slot* slot = &s;
    actions.push_back([this, seq, slot, t_enq] {
      pool_.submit(StageJob{StageId::CpuFeatureCopy, seq, [this, seq, slot, t_enq] {
                              const std::int64_t t_start = now_us();
                              slot->frontier_rows.resize(slot->raw.input_frontier.size() * opts_.feat_dim);
                              auto done = [this, seq, slot, t_enq, t_start](std::exception_ptr err) {
                                record({seq, StageId::CpuFeatureCopy, t_enq, t_start, now_us(),
                                        slot->frontier_rows.size() * sizeof(float)});
                                std::lock_guard lk(mu_);
                                if (err) {
                                  slot->phase = Phase::Failed;
                                  slot->error = err;
                                  slot->failed_group = 1;
                                } else {
                                  slot->phase = Phase::CpuDone;
                                }
                                dirty_ = true;
                                control_cv_.notify_one();
                                op_end();
                              };
                              try {
                                features_(slot->raw.input_frontier, slot->frontier_rows.data(), done);
                              } catch (...) {
                                done(std::current_exception());
                              }
                            }});
    });
  }

  // Device staging, admitted in seq order; the slot is held until delivery.
  while (next_device_ < next_cpu_) {
    const std::uint64_t seq = next_device_;
    Slot& s = slots_.at(seq);
    if (s.phase == Phase::Failed) {
      if (s.failed_group == 1) --in_cpu_;
      s.failed_group = -1;
      ++next_device_;
      consumer_cv_.notify_all();
      continue;
    }
    if (s.phase != Phase::CpuDone || in_device_ >= cap.device) break;
    --in_cpu_;
    ++in_device_;
    s.holds_device = true;
    s.phase = Phase::Device;
    ++next_device_;
    op_begin();
    const std::int64_t t_enq = now_us();
    Slot* slot = &s;
    actions.push_back([this, seq, slot, t_enq] {
      pool_.submit(StageJob{StageId::DeviceFeatureCopy, seq, [this, seq, slot, t_enq] {
                              const std::int64_t t_start = now_us();
                              std::exception_ptr err;
                              MiniBatch mb;
                              try {
                                if (opts_.device_latency.count() > 0) {
                                  std::this_thread::sleep_for(opts_.device_latency);
                                }
                                mb = stage_on_device(slot->raw, slot->frontier_rows, opts_.feat_dim,
                                                     edge_offsets_);
                              } catch (...) {
                                err = std::current_exception();
                              }
                              const std::int64_t t_end = now_us();
                              record({seq, StageId::DeviceFeatureCopy, t_enq, t_start, t_end,
                                      mb.features.size() * sizeof(float)});
                              std::lock_guard lk(mu_);
                              slot->raw = {};
                              slot->frontier_rows = {};
                              if (err) {
                                slot->phase = Phase::Failed;
                                slot->error = err;
                                slot->holds_device = false;
                                --in_device_;
                              } else {
                                slot->phase = Phase::Ready;
                                slot->staged = std::move(mb);
                              }
                              dirty_ = true;
                              control_cv_.notify_one();
                              consumer_cv_.notify_all();
                              op_end();
                            }});
    });
  }
  note_occupancy();
}

void Pipeline::note_occupancy() {
  const CapacityConfig& cap = opts_.capacities;
  max_seen_.sample = std::max(max_seen_.sample, in_sample_);
  max_seen_.cpu = std::max(max_seen_.cpu, in_cpu_);
  max_seen_.device = std::max(max_seen_.device, in_device_);
  if (in_sample_ > cap.sample || in_cpu_ > cap.cpu || in_device_ > cap.device) {
    violated_ = true;
    log::error("pipeline capacity exceeded");
    assert(false && "pipeline capacity exceeded");
  }
  if (opts_.record_occupancy) occupancy_.push_back({now_us(), in_sample_, in_cpu_, in_device_});
}

MiniBatch Pipeline::next_minibatch() {
  std::unique_lock lk(mu_);
  if (!started_) throw StateError("pipeline not started");
  const std::uint64_t seq = next_deliver_;
  consumer_cv_.wait(lk, [&] {
    if (stopping_) return true;
    auto it = slots_.find(seq);
    if (it == slots_.end()) return false;
    return it->second.phase == Phase::Ready || (it->second.phase == Phase::Failed && next_device_ > seq);
  });
  if (stopping_) throw StateError("pipeline stopped");
  auto node = slots_.extract(seq);
  Slot& s = node.mapped();
  ++next_deliver_;
  if (s.holds_device) {
    --in_device_;
    dirty_ = true;
    control_cv_.notify_one();
  }
  if (s.phase == Phase::Failed) throw PipelineError(seq, describe(s.error));
  return std::move(*s.staged);
}

void Pipeline::stop() {
  {
    std::lock_guard lk(mu_);
    if (!started_ || stopping_) {
      stopping_ = true;
      return;
    }
    stopping_ = true;
  }
  control_cv_.notify_all();
  consumer_cv_.notify_all();
  if (control_.joinable()) control_.join();
  std::unique_lock lk(mu_);
  ops_cv_.wait(lk, [&] { return outstanding_ops_ == 0; });
}

std::vector<StageRecord> Pipeline::metrics() const {
  std::lock_guard lk(metrics_mu_);
  return metrics_;
}

void Pipeline::write_metrics_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw IoError(path.string(), "cannot open for writing");
  out << "seq_no,stage,enqueue_us,start_us,end_us,bytes\n";
  for (const auto& r : metrics()) {
    out << r.seq_no << ',' << stage_name(r.stage) << ',' << r.enqueue_us << ',' << r.start_us << ','
        << r.end_us << ',' << r.bytes << '\n';
  }
}

std::vector<Occupancy> Pipeline::occupancy() const {
  std::lock_guard lk(mu_);
  return occupancy_;
}

CapacityConfig Pipeline::max_observed() const {
  std::lock_guard lk(mu_);
  return max_seen_;
}

SerialExecutor::SerialExecutor(std::uint32_t feat_dim, TargetSource targets, SampleFn sample,
                               FeatureFn features, TypeOffsets edge_offsets)
    : feat_dim_(feat_dim),
      targets_(std::move(targets)),
      sample_(std::move(sample)),
      features_(std::move(features)),
      edge_offsets_(std::move(edge_offsets)) {}

MiniBatch SerialExecutor::next_minibatch() {
  TargetBatch target = targets_();
  const std::uint64_t seq = target.seq_no;
  try {
    std::promise<RawMiniBatch> sampled;
    auto sf = sampled.get_future();
    sample_(std::move(target), [&sampled](std::exception_ptr err, RawMiniBatch raw) {
      if (err) {
        sampled.set_exception(err);
      } else {
        sampled.set_value(std::move(raw));
      }
    });
    RawMiniBatch raw = sf.get();
    std::vector<float> rows(raw.input_frontier.size() * feat_dim_);
    std::promise<void> pulled;
    auto pf = pulled.get_future();
    features_(raw.input_frontier, rows.data(), [&pulled](std::exception_ptr err) {
      if (err) {
        pulled.set_exception(err);
      } else {
        pulled.set_value();
      }
    });
    pf.get();
    return stage_on_device(raw, rows, feat_dim_, edge_offsets_);
  } catch (const std::exception& e) {
    throw PipelineError(seq, e.what());
  }
}

}  // namespace hfg
