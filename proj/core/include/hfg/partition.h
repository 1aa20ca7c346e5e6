/**
 *  Copyright (c) 2026 by Contributors
 * @file hfg/partition.h
 * @brief Balance constraints, two-level partition books, and physical
 *        per-machine subgraphs.
 */
#ifndef HFG_PARTITION_H_
#define HFG_PARTITION_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hfg/graph.h"
#include "hfg/graph_io.h"

namespace hfg {

/// Per-vertex constraint vectors: one-hot vertex type, train/val/test
/// indicators, then total degree (in + out).
struct Constraints {
  std::size_t ncon = 0;
  std::vector<std::string> names;
  std::vector<std::int64_t> weights;

  std::span<const std::int64_t> of(VertexId v) const { return {weights.data() + v * ncon, ncon}; }
  std::vector<std::int64_t> column_sums() const;
};

Constraints build_constraints(const HomogenizedGraph& g);

struct PartitionAssignment {
  std::uint32_t k = 1;
  std::vector<PartId> part_of;
  std::size_t ncon = 0;
  /// k * ncon constraint sums.
  std::vector<std::int64_t> part_sums;
  double eps_requested = 0.05;
  double eps_used = 0.05;
  bool relaxed = false;
  bool balanced = true;

  std::vector<std::int64_t> recompute_sums(const Constraints& c) const;
};

/// Multilevel min-cut partitioning under every constraint's (1+eps) bound.
/// Throws ArgumentError for k == 0, k > |V|, or eps <= 0.
PartitionAssignment partition_multiconstraint(const HomogenizedGraph& g, std::uint32_t k,
                                              const Constraints& constraints, double eps,
                                              std::uint64_t seed);

/// Seeded uniformly random assignment with part sizes differing by at most 1.
PartitionAssignment partition_random(const HomogenizedGraph& g, std::uint32_t k,
                                     const Constraints& constraints, std::uint64_t seed);

/// Number of edges whose endpoints are in different parts.
std::uint64_t edge_cut(const HomogenizedGraph& g, std::span<const PartId> part_of);

struct PartitionBook {
  PartitionAssignment first_level;
  std::uint32_t trainers_per_machine = 1;
  /// Trainer sub-partition of every vertex, relative to its machine.
  std::vector<std::uint32_t> sub_part;
  /// Machine owning each edge (owner of its destination).
  std::vector<PartId> edge_part;
  TypeOffsets vertex_offsets;
  TypeOffsets edge_offsets;
  /// Per machine: eps actually used at the second level and whether it had
  /// to be relaxed.
  std::vector<double> second_eps_used;
  std::vector<bool> second_relaxed;
  /// k * T count of training vertices per sub-partition.
  std::vector<std::uint64_t> sub_train_counts;

  // Dataset metadata so a partition directory is self-describing.
  HeteroSchema schema;
  std::vector<std::uint32_t> vertex_feat_dims;
  std::vector<std::uint32_t> edge_feat_dims;
  std::uint32_t num_classes = 0;

  std::uint32_t num_partitions() const { return first_level.k; }
  PartId owner(VertexId v) const { return first_level.part_of.at(v); }
  PartId edge_owner(EdgeId e) const { return edge_part.at(e); }
  std::uint32_t trainer_of(VertexId v) const { return sub_part.at(v); }
};

/// Splits every machine partition into T trainer sub-partitions balancing
/// vertex count and training-vertex count. No physical split at this level.
PartitionBook second_level_partition(const HomogenizedGraph& g,
                                     const PartitionAssignment& first_level,
                                     std::uint32_t trainers_per_machine, double eps,
                                     std::uint64_t seed);

/// Baseline: each machine's vertices are dealt to trainers by a seeded
/// random permutation, ignoring locality.
PartitionBook second_level_random(const HomogenizedGraph& g,
                                  const PartitionAssignment& first_level,
                                  std::uint32_t trainers_per_machine, std::uint64_t seed);

/// One machine's share of the graph. Local IDs place core vertices first
/// (ascending global ID), then halo vertices (ascending global ID). The local
/// CSR holds the in-edges of core vertices only; halo rows are empty.
struct PhysicalPartition {
  PartId id = 0;
  std::uint64_t num_core = 0;
  std::vector<VertexId> local_to_global;
  std::vector<std::uint64_t> indptr{0};
  std::vector<std::uint64_t> indices;
  std::vector<EdgeId> edge_ids;
  std::vector<std::uint8_t> core_masks;
  std::vector<std::int32_t> core_labels;
  TypeOffsets vertex_offsets;
  TypeOffsets edge_offsets;

  std::uint64_t num_local() const { return local_to_global.size(); }
  std::uint64_t num_halo() const { return num_local() - num_core; }
  std::uint64_t num_owned_edges() const { return edge_ids.size(); }

  std::optional<std::uint64_t> to_local(VertexId v) const;
  VertexId to_global(std::uint64_t local) const { return local_to_global.at(local); }
  bool owns(VertexId v) const;
  std::span<const VertexId> core_vertices() const { return {local_to_global.data(), num_core}; }
  std::span<const VertexId> halo_vertices() const {
    return {local_to_global.data() + num_core, num_halo()};
  }
  std::span<const std::uint64_t> in_sources_local(std::uint64_t local) const {
    return {indices.data() + indptr[local], indptr[local + 1] - indptr[local]};
  }
  std::span<const EdgeId> in_edge_ids_local(std::uint64_t local) const {
    return {edge_ids.data() + indptr[local], indptr[local + 1] - indptr[local]};
  }
  SplitMask mask_of(VertexId core_vertex) const;
  std::int32_t label_of(VertexId core_vertex) const;

  /// Throws StructuralError when an invariant is broken.
  void validate() const;
};

struct PartitionShard {
  PhysicalPartition graph;
  /// Indexed by vertex/edge type; rows ordered by ascending owned type-local ID.
  std::vector<std::optional<FeatureMatrix>> vertex_features;
  std::vector<std::optional<FeatureMatrix>> edge_features;
};

/// Edges go to the owner of their destination; features are sharded by
/// first-level ownership (edge features by edge ownership).
std::vector<PartitionShard> materialize_partitions(const Dataset& data, const PartitionBook& book);

/// Owned type-local IDs of type t for a machine, ascending.
std::vector<std::uint64_t> owned_typed_vertices(const PartitionBook& book, PartId machine, TypeId t);
std::vector<std::uint64_t> owned_typed_edges(const PartitionBook& book, PartId machine, TypeId et);

struct PartitionOptions {
  std::uint32_t machines = 1;
  std::uint32_t trainers_per_machine = 1;
  double eps = 0.05;
  std::uint64_t seed = 0;
  bool random_first_level = false;
  bool random_second_level = false;
};

/// Full offline pipeline: constraints, first level, second level, metadata.
PartitionBook partition_dataset(const Dataset& data, const PartitionOptions& opts);

}  // namespace hfg

#endif  // HFG_PARTITION_H_
