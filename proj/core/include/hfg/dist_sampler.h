/**
 *  Copyright (c) 2026 by Contributors
 * @file hfg/dist_sampler.h
 * @brief Multi-hop sampling over a partitioned graph.
 *
 * Each hop splits its seeds by owner. Remote subsets go out as
 * SAMPLE_NEIGHBORS requests; the local subset runs as a worker job at the
 * same time. When every part has answered, a worker stitches the hop, computes
 * the next frontier and starts the following hop. No thread waits on the
 * network.
 */
#ifndef HFG_DIST_SAMPLER_H_
#define HFG_DIST_SAMPLER_H_

#include <exception>
#include <functional>
#include <memory>

#include "hfg/partition.h"
#include "hfg/rpc.h"
#include "hfg/sampler.h"
#include "hfg/worker_pool.h"

namespace hfg {

class DistSampler {
 public:
  using Done = std::function<void(std::exception_ptr, RawMiniBatch)>;

  /// `client` may be null when the book has a single partition; `pool` may be
  /// null, in which case local work runs on the calling thread.
  DistSampler(PartId self, std::shared_ptr<const PartitionBook> book,
              std::shared_ptr<const PhysicalPartition> local, RpcClient* client,
              PriorityWorkerPool* pool);

  void attach_client(RpcClient* client) { client_ = client; }

  void sample_async(TargetBatch target, FanoutPlan plan, Done done);
  RawMiniBatch sample(TargetBatch target, const FanoutPlan& plan);

  /// Serves SAMPLE_NEIGHBORS from the local partition.
  void install(RpcServer& server);
  SampleResponse serve(const SampleRequest& req) const;

  const PartitionBook& book() const { return *book_; }

 private:
  struct Run;
  void start_hop(std::shared_ptr<Run> run);
  void finish_hop(std::shared_ptr<Run> run);
  void post(std::uint64_t seq_no, std::function<void()> fn);

  PartId self_;
  std::shared_ptr<const PartitionBook> book_;
  std::shared_ptr<const PhysicalPartition> local_;
  RpcClient* client_;
  PriorityWorkerPool* pool_;
};

}  // namespace hfg

#endif  // HFG_DIST_SAMPLER_H_
