/**
 *  Copyright (c) 2026 by Contributors
 * @file hfg/multilevel.h
 * @brief Multilevel multi-constraint k-way partitioning of an undirected,
 *        edge- and vertex-weighted graph.
 *
 * Coarsening uses heavy-edge matching (ties broken by lowest neighbor ID,
 * vertices visited in a seeded random order). The coarsest graph is
 * partitioned by greedy region growing from several seeded starts; every
 * level is then refined with boundary k-way Fiduccia-Mattheyses passes with
 * rollback. A move is legal only when the target part stays within the
 * (1+eps) bound of every constraint; a separate rebalancing step runs first
 * whenever some part is over its bound.
 */
#ifndef HFG_MULTILEVEL_H_
#define HFG_MULTILEVEL_H_

#include <cstdint>
#include <span>
#include <vector>

#include "hfg/graph.h"

namespace hfg {

/// Symmetric CSR with merged parallel edges and no self loops.
struct WeightedGraph {
  std::vector<std::uint64_t> xadj{0};
  std::vector<std::uint32_t> adjncy;
  std::vector<std::int64_t> adjwgt;
  std::size_t ncon = 0;
  /// n * ncon vertex weights, row-major.
  std::vector<std::int64_t> vwgt;

  std::uint32_t num_vertices() const { return static_cast<std::uint32_t>(xadj.size() - 1); }
  std::span<const std::int64_t> weight(std::uint32_t v) const {
    return {vwgt.data() + v * ncon, ncon};
  }
};

/// Builds a WeightedGraph from a directed edge list; u->v and v->u merge into
/// one undirected edge whose weight is the multiplicity. Self loops dropped.
WeightedGraph build_weighted_graph(std::uint32_t n,
                                   std::span<const std::pair<std::uint32_t, std::uint32_t>> edges,
                                   std::size_t ncon, std::vector<std::int64_t> vwgt);

/// Sum of weights of edges whose endpoints lie in different parts.
std::int64_t weighted_cut(const WeightedGraph& g, std::span<const PartId> part);

struct Contraction {
  WeightedGraph coarse;
  /// fine vertex -> coarse vertex
  std::vector<std::uint32_t> cmap;
};

/// One round of heavy-edge matching followed by contraction. `max_vwgt`
/// bounds each component of a merged vertex (a pair that would exceed it is
/// not matched).
Contraction coarsen_once(const WeightedGraph& g, std::span<const std::int64_t> max_vwgt,
                         std::uint64_t seed);

struct MultilevelResult {
  std::vector<PartId> part;
  double eps_used = 0;
  bool relaxed = false;
  /// True when every component of every part is within the bound of eps_used.
  bool balanced = false;
  std::int64_t cut = 0;
  std::size_t levels = 0;
};

/// Partitions g into k parts. If the result violates the (1+eps) bound, eps
/// is doubled (capped at 1.0) and the run repeated; `relaxed` records that.
MultilevelResult multilevel_partition(const WeightedGraph& g, std::uint32_t k, double eps,
                                      std::uint64_t seed);

/// Per-part constraint sums (k * ncon).
std::vector<std::int64_t> part_weights(const WeightedGraph& g, std::span<const PartId> part,
                                       std::uint32_t k);

/// True when max_p sum_c(p) <= (1+eps) * total_c / k for every component.
bool within_balance(std::span<const std::int64_t> part_sums, std::span<const std::int64_t> totals,
                    std::uint32_t k, double eps);

}  // namespace hfg

#endif  // HFG_MULTILEVEL_H_
