/**
 *  Copyright (c) 2026 by Contributors
 * @file hfg/sampler.h
 * @brief Target scheduling, fanout neighbor sampling, stitching, frontiers
 *        and mini-batch compaction.
 *
 * Layers are numbered from the input side: fanouts[0] is used by the GNN
 * layer that reads raw features, fanouts.back() by the layer producing seed
 * outputs. Sampling therefore starts from the seeds with fanouts.back() and
 * walks inwards.
 *
 * Each (seed vertex, layer) draws from its own stream keyed by
 * (epoch_seed, seq_no, vertex, layer), so a sample does not depend on which
 * machine or thread computes it.
 */
#ifndef HFG_SAMPLER_H_
#define HFG_SAMPLER_H_

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "hfg/graph.h"
#include "hfg/partition.h"
#include "hfg/rng.h"
#include "hfg/wire.h"

namespace hfg {

class PriorityWorkerPool;

enum class TaskKind : std::uint8_t { Vertex = 0, Link = 1 };

struct FanoutPlan {
  /// Outermost layer last; kFanoutFull takes every in-edge.
  std::vector<std::uint32_t> fanouts;

  std::size_t num_layers() const { return fanouts.size(); }
  static FanoutPlan full(std::size_t layers) { return {std::vector<std::uint32_t>(layers, kFanoutFull)}; }
  /// Throws ArgumentError on an empty plan or a zero fanout.
  void validate() const;
};

struct RngKey {
  std::uint64_t epoch_seed = 0;
  std::uint64_t seq_no = 0;
};

inline StreamRng seed_stream(RngKey key, VertexId v, std::uint32_t layer) {
  return StreamRng({key.epoch_seed, key.seq_no, v, layer});
}

struct TargetBatch {
  TaskKind kind = TaskKind::Vertex;
  std::uint64_t seq_no = 0;
  std::uint64_t epoch = 0;
  std::uint64_t epoch_seed = 0;
  /// Vertex task: targets. Link task: sorted union of all pair endpoints.
  std::vector<VertexId> seeds;
  std::vector<std::pair<VertexId, VertexId>> positives;
  std::vector<std::pair<VertexId, VertexId>> negatives;

  RngKey key() const { return {epoch_seed, seq_no}; }
};

/// Endless stream of target batches over one trainer's training IDs. Every
/// epoch is a fresh seeded permutation chunked into batches; seq_no keeps
/// counting across epochs.
class BatchScheduler {
 public:
  /// Throws ConfigError when `ids` is empty, ArgumentError when batch_size
  /// is 0. `max_batches` truncates each epoch.
  BatchScheduler(std::vector<std::uint64_t> ids, std::size_t batch_size, std::uint64_t seed,
                 std::optional<std::size_t> max_batches = std::nullopt);

  static std::uint64_t epoch_seed(std::uint64_t seed, std::uint64_t epoch);
  /// The seeded Fisher-Yates permutation of `ids` for one epoch.
  static std::vector<std::uint64_t> permutation(std::span<const std::uint64_t> ids,
                                                std::uint64_t epoch_seed);

  std::size_t batches_per_epoch() const;
  std::vector<std::vector<std::uint64_t>> epoch_batches(std::uint64_t epoch) const;

  /// The next batch of IDs; `epoch` and `seq_no` describe it.
  struct Item {
    std::uint64_t seq_no;
    std::uint64_t epoch;
    std::uint64_t epoch_seed;
    std::vector<std::uint64_t> ids;
  };
  Item next();

 private:
  std::vector<std::uint64_t> ids_;
  std::size_t batch_size_;
  std::uint64_t seed_;
  std::optional<std::size_t> max_batches_;
  std::uint64_t seq_ = 0;
  std::uint64_t epoch_ = 0;
  std::size_t pos_in_epoch_ = 0;
  std::vector<std::vector<std::uint64_t>> current_;
};

TargetBatch make_vertex_task(BatchScheduler::Item item);

/// Corrupts the destination of every positive `num_negatives` times with a
/// uniform draw from its vertex type's global range.
TargetBatch make_link_task(const BatchScheduler::Item& item,
                           std::span<const std::pair<VertexId, VertexId>> positives,
                           std::uint32_t num_negatives, const TypeOffsets& vertex_offsets);

/// In-edges of one destination: edge IDs ascending, sources either global
/// IDs or local IDs translated through `local_to_global`.
struct AdjacencyRow {
  std::span<const EdgeId> edges;
  std::span<const std::uint64_t> sources;
  const VertexId* local_to_global = nullptr;

  VertexId source(std::size_t i) const {
    return local_to_global ? local_to_global[sources[i]] : sources[i];
  }
};

/// Adjacency view over the whole graph.
struct GraphAdjacency {
  const HomogenizedGraph& g;
  AdjacencyRow row(VertexId v) const { return {g.in_edge_ids(v), g.in_sources(v), nullptr}; }
  const TypeOffsets& edge_offsets() const { return g.edge_offsets(); }
};

/// Adjacency view over one machine's owned in-edges.
struct PartitionAdjacency {
  const PhysicalPartition& p;
  /// Throws OwnershipError for a vertex that is not a core vertex.
  AdjacencyRow row(VertexId v) const;
  const TypeOffsets& edge_offsets() const { return p.edge_offsets; }
};

/// Per seed, per incident edge type: all in-edges when the run has at most
/// `fanout` edges, otherwise a uniform subset of size `fanout` without
/// replacement, emitted in stored order.
SampleResponse sample_one_hop(const GraphAdjacency& adj, std::span<const VertexId> seeds,
                              std::uint32_t fanout, RngKey key, std::uint32_t layer);
/// Throws OwnershipError for a seed the partition does not own.
SampleResponse sample_one_hop(const PartitionAdjacency& adj, std::span<const VertexId> seeds,
                              std::uint32_t fanout, RngKey key, std::uint32_t layer);

/// `fanout` distinct indices from [0, n), ascending (Floyd's algorithm).
std::vector<std::uint32_t> choose_without_replacement(std::uint32_t n, std::uint32_t fanout,
                                                      StreamRng& rng);

struct SeedSplit {
  /// Per partition, the seeds routed there, in input order.
  std::vector<std::vector<VertexId>> subsets;
  /// For every input seed: (partition, index within that partition's subset).
  std::vector<std::pair<PartId, std::uint32_t>> route;
};

/// Routes each seed to the machine owning its in-edges.
SeedSplit split_local_remote(std::span<const VertexId> seeds, const PartitionBook& book);

struct SampledBlock {
  std::uint32_t layer = 0;
  std::vector<VertexId> dsts;
  std::vector<SampledEdge> edges;

  friend bool operator==(const SampledBlock&, const SampledBlock&) = default;
};

/// Reassembles per-partition responses into one block ordered by seed order.
/// Throws IncompleteBatchError when a partition that received seeds has no
/// result or a result that does not cover its seeds.
SampledBlock stitch(std::span<const VertexId> seeds, const SeedSplit& split,
                    std::span<const std::optional<SampleResponse>> results, std::uint32_t layer);

/// Sorted unique union of block sources and destinations.
std::vector<VertexId> compute_frontier(const SampledBlock& block);
/// compute_frontier for several batches at once, spread across the pool.
std::vector<std::vector<VertexId>> compute_frontier_bundled(std::span<const SampledBlock* const> blocks,
                                                            PriorityWorkerPool* pool);

/// A sampled but not yet relabeled mini-batch.
struct RawMiniBatch {
  TargetBatch target;
  /// blocks[l] feeds GNN layer l.
  std::vector<SampledBlock> blocks;
  /// Sorted global IDs whose features layer 0 reads.
  std::vector<VertexId> input_frontier;

  friend bool operator==(const RawMiniBatch& a, const RawMiniBatch& b) {
    return a.target.seq_no == b.target.seq_no && a.target.seeds == b.target.seeds &&
           a.blocks == b.blocks && a.input_frontier == b.input_frontier;
  }
};

/// Multi-hop sampling on the whole graph; the single-machine reference.
RawMiniBatch sample_minibatch(const HomogenizedGraph& g, TargetBatch target, const FanoutPlan& plan);

struct CompactBlock {
  /// Global IDs; the first num_dst entries are the destinations.
  std::vector<VertexId> src_nodes;
  std::uint32_t num_dst = 0;
  std::vector<std::uint32_t> edge_src;
  std::vector<std::uint32_t> edge_dst;
  std::vector<EdgeId> edge_ids;
  std::vector<TypeId> edge_types;

  std::size_t num_src() const { return src_nodes.size(); }
  std::size_t num_edges() const { return edge_src.size(); }
  friend bool operator==(const CompactBlock&, const CompactBlock&) = default;
};

struct CompactMiniBatch {
  TaskKind kind = TaskKind::Vertex;
  std::uint64_t seq_no = 0;
  std::uint64_t epoch = 0;
  /// blocks[0] is the input layer.
  std::vector<CompactBlock> blocks;
  /// Global IDs of the output rows (outermost destinations), seeds first.
  std::vector<VertexId> seeds;
  /// Link task: pair endpoints as output row indices.
  std::vector<std::pair<std::uint32_t, std::uint32_t>> positives;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> negatives;

  const std::vector<VertexId>& input_nodes() const { return blocks.front().src_nodes; }
  friend bool operator==(const CompactMiniBatch&, const CompactMiniBatch&) = default;
};

/// Relabels every block to dense IDs. A block's destinations take local IDs
/// [0, num_dst) in the order of the next outer block's sources (the seeds
/// for the outermost block); its remaining sources follow in ascending
/// global ID order. Throws StructuralError when layers are inconsistent.
CompactMiniBatch compact(const RawMiniBatch& raw, const TypeOffsets& edge_offsets);

/// Row i of the result is the position in `sorted_frontier` of nodes[i].
std::vector<std::uint32_t> frontier_positions(std::span<const VertexId> sorted_frontier,
                                              std::span<const VertexId> nodes);

/// Number of distinct vertices touched by a mini-batch across all layers.
std::size_t unique_vertex_count(const RawMiniBatch& raw);

}  // namespace hfg

#endif  // HFG_SAMPLER_H_
