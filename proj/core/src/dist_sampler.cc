/**
 *  Copyright (c) 2026 by Contributors
 * @file dist_sampler.cc
 */
#include "hfg/dist_sampler.h"

#include <future>
#include <mutex>

#include "hfg/error.h"

namespace hfg {

struct DistSampler::Run {
  RawMiniBatch raw;
  FanoutPlan plan;
  Done done;
  /// Index of the block being sampled; counts down to 0.
  std::size_t layer = 0;
  std::vector<VertexId> seeds;
  SeedSplit split;
  std::mutex mu;
  std::vector<std::optional<SampleResponse>> results;
  std::size_t pending = 0;
  std::exception_ptr error;

  void fail(std::exception_ptr e) {
    std::lock_guard lk(mu);
    if (!error) error = e;
  }
};

DistSampler::DistSampler(PartId self, std::shared_ptr<const PartitionBook> book,
                         std::shared_ptr<const PhysicalPartition> local, RpcClient* client,
                         PriorityWorkerPool* pool)
    : self_(self), book_(std::move(book)), local_(std::move(local)), client_(client), pool_(pool) {
  if (!book_ || !local_) throw ArgumentError("sampler needs a partition book and a local partition");
  if (local_->id != self_) throw ArgumentError("local partition id differs from sampler rank");
}

void DistSampler::post(std::uint64_t seq_no, std::function<void()> fn) {
  if (pool_) {
    pool_->submit(StageJob{StageId::NeighborSample, seq_no, std::move(fn)});
  } else {
    fn();
  }
}

void DistSampler::sample_async(TargetBatch target, FanoutPlan plan, Done done) {
  plan.validate();
  auto run = std::make_shared<Run>();
  run->plan = std::move(plan);
  run->done = std::move(done);
  run->layer = run->plan.num_layers() - 1;
  run->raw.blocks.resize(run->plan.num_layers());
  run->seeds = target.seeds;
  run->raw.target = std::move(target);
  start_hop(run);
}

void DistSampler::start_hop(std::shared_ptr<Run> run) {
  const auto layer = static_cast<std::uint32_t>(run->layer);
  const std::uint32_t fanout = run->plan.fanouts[layer];
  const RngKey key = run->raw.target.key();
  const std::uint64_t seq = run->raw.target.seq_no;
  try {
    run->split = split_local_remote(run->seeds, *book_);
  } catch (...) {
    run->done(std::current_exception(), {});
    return;
  }
  const std::size_t k = run->split.subsets.size();
  run->results.assign(k, std::nullopt);
  // The hop may finish before this function returns; run->split is not
  // read after the first request goes out.
  std::vector<std::pair<std::size_t, SampleRequest>> remote;
  bool local = false;
  for (std::size_t p = 0; p < k; ++p) {
    if (run->split.subsets[p].empty()) continue;
    if (p == self_) {
      local = true;
      continue;
    }
    SampleRequest req;
    req.layer = static_cast<std::uint8_t>(layer);
    req.fanout = fanout;
    req.seeds = run->split.subsets[p];
    req.rng_key = {key.epoch_seed, key.seq_no};
    remote.emplace_back(p, std::move(req));
  }
  if (remote.empty() && !local) {
    finish_hop(run);
    return;
  }
  {
    std::lock_guard lk(run->mu);
    run->pending = remote.size() + (local ? 1 : 0);
  }
  auto part_done = [this, run](std::size_t p, std::exception_ptr err,
                               std::optional<SampleResponse> res) {
    bool last;
    {
      std::lock_guard lk(run->mu);
      if (err && !run->error) run->error = err;
      if (res) run->results[p] = std::move(res);
      last = --run->pending == 0;
    }
    if (last) post(run->raw.target.seq_no, [this, run] { finish_hop(run); });
  };

  if (local) {
    const PartId self = self_;
    auto job = [this, run, part_done, self, fanout, key, layer] {
      std::exception_ptr err;
      std::optional<SampleResponse> res;
      try {
        res = sample_one_hop(PartitionAdjacency{*local_}, run->split.subsets[self], fanout, key, layer);
      } catch (...) {
        err = std::current_exception();
      }
      part_done(self, err, std::move(res));
    };
    post(seq, std::move(job));
  }
  for (auto& [p, req] : remote) {
    if (client_ == nullptr) {
      part_done(p, std::make_exception_ptr(StateError("remote seeds on a sampler without a client")),
                std::nullopt);
      continue;
    }
    client_->call_async(static_cast<std::uint32_t>(p), Verb::SampleNeighbors, encode(req),
                        [part_done, p](std::exception_ptr err, Bytes resp) {
                          std::optional<SampleResponse> res;
                          if (!err) {
                            try {
                              res = decode<SampleResponse>(resp);
                            } catch (...) {
                              err = std::current_exception();
                            }
                          }
                          part_done(p, err, std::move(res));
                        });
  }
}

void DistSampler::finish_hop(std::shared_ptr<Run> run) {
  if (run->error) {
    run->done(run->error, {});
    return;
  }
  try {
    const auto layer = static_cast<std::uint32_t>(run->layer);
    SampledBlock block = stitch(run->seeds, run->split, run->results, layer);
    run->results.clear();
    run->seeds = compute_frontier(block);
    run->raw.blocks[layer] = std::move(block);
  } catch (...) {
    run->done(std::current_exception(), {});
    return;
  }
  if (run->layer == 0) {
    run->raw.input_frontier = std::move(run->seeds);
    run->done(nullptr, std::move(run->raw));
    return;
  }
  --run->layer;
  start_hop(run);
}

RawMiniBatch DistSampler::sample(TargetBatch target, const FanoutPlan& plan) {
  std::promise<RawMiniBatch> promise;
  auto fut = promise.get_future();
  sample_async(std::move(target), plan, [&promise](std::exception_ptr err, RawMiniBatch raw) {
    if (err) {
      promise.set_exception(err);
    } else {
      promise.set_value(std::move(raw));
    }
  });
  return fut.get();
}

SampleResponse DistSampler::serve(const SampleRequest& req) const {
  if (req.fanout == 0) throw ArgumentError("fanout must be >= 1");
  return sample_one_hop(PartitionAdjacency{*local_}, req.seeds, req.fanout,
                        RngKey{req.rng_key[0], req.rng_key[1]}, req.layer);
}

void DistSampler::install(RpcServer& server) {
  server.register_handler(Verb::SampleNeighbors, [this](Request r, Responder s) {
    s.reply(encode(serve(decode<SampleRequest>(r.payload))));
  });
}

}  // namespace hfg
