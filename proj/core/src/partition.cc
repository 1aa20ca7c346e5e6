/**
 *  Copyright (c) 2026 by Contributors
 * @file partition.cc
 * @brief Constraint construction, first/second level partitioning, and
 *        physical partition materialization.
 */
#include "hfg/partition.h"

#include <algorithm>
#include <numeric>

#include "hfg/error.h"
#include "hfg/multilevel.h"
#include "hfg/rng.h"

namespace hfg {

std::vector<std::int64_t> Constraints::column_sums() const {
  std::vector<std::int64_t> sums(ncon, 0);
  for (std::size_t i = 0; i < weights.size(); ++i) sums[i % ncon] += weights[i];
  return sums;
}

Constraints build_constraints(const HomogenizedGraph& g) {
  const std::size_t ntypes = g.vertex_offsets().num_types();
  Constraints c;
  c.ncon = ntypes + 4;
  for (std::size_t t = 0; t < ntypes; ++t) c.names.push_back("type" + std::to_string(t));
  c.names.insert(c.names.end(), {"train", "val", "test", "degree"});
  const auto n = g.num_vertices();
  c.weights.assign(n * c.ncon, 0);
  const auto deg = g.total_degrees();
  for (VertexId v = 0; v < n; ++v) {
    auto* row = c.weights.data() + v * c.ncon;
    row[g.vertex_type(v)] = 1;
    const auto m = g.masks()[v];
    if (m >= 1 && m <= 3) row[ntypes + m - 1] = 1;
    row[ntypes + 3] = static_cast<std::int64_t>(deg[v]);
  }
  return c;
}

std::vector<std::int64_t> PartitionAssignment::recompute_sums(const Constraints& c) const {
  std::vector<std::int64_t> sums(static_cast<std::size_t>(k) * c.ncon, 0);
  for (VertexId v = 0; v < part_of.size(); ++v) {
    auto w = c.of(v);
    for (std::size_t j = 0; j < c.ncon; ++j) sums[part_of[v] * c.ncon + j] += w[j];
  }
  return sums;
}

namespace {

WeightedGraph to_weighted(const HomogenizedGraph& g, const Constraints& c) {
  if (g.num_vertices() > std::numeric_limits<std::uint32_t>::max()) {
    throw ArgumentError("partitioner supports at most 2^32-1 vertices");
  }
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
  edges.reserve(g.num_edges());
  for (VertexId v = 0; v < g.num_vertices(); ++v) {
    for (auto s : g.in_sources(v)) {
      edges.emplace_back(static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(v));
    }
  }
  return build_weighted_graph(static_cast<std::uint32_t>(g.num_vertices()), edges, c.ncon, c.weights);
}

void check_k(const HomogenizedGraph& g, std::uint32_t k) {
  if (k == 0) throw ArgumentError("k must be >= 1");
  if (k > g.num_vertices()) {
    throw ArgumentError("k = " + std::to_string(k) + " exceeds vertex count " +
                        std::to_string(g.num_vertices()));
  }
}

}  // namespace

PartitionAssignment partition_multiconstraint(const HomogenizedGraph& g, std::uint32_t k,
                                              const Constraints& constraints, double eps,
                                              std::uint64_t seed) {
  check_k(g, k);
  if (!(eps > 0)) throw ArgumentError("eps must be > 0");
  const WeightedGraph wg = to_weighted(g, constraints);
  MultilevelResult r = multilevel_partition(wg, k, eps, seed);
  PartitionAssignment a;
  a.k = k;
  a.part_of = std::move(r.part);
  a.ncon = constraints.ncon;
  a.part_sums = a.recompute_sums(constraints);
  a.eps_requested = eps;
  a.eps_used = r.eps_used;
  a.relaxed = r.relaxed;
  a.balanced = r.balanced;
  return a;
}

PartitionAssignment partition_random(const HomogenizedGraph& g, std::uint32_t k,
                                     const Constraints& constraints, std::uint64_t seed) {
  check_k(g, k);
  const auto n = g.num_vertices();
  std::vector<VertexId> order(n);
  std::iota(order.begin(), order.end(), VertexId{0});
  StreamRng rng{seed, 0x7A4D};
  for (auto i = n; i > 1; --i) std::swap(order[i - 1], order[rng.uniform(i)]);
  PartitionAssignment a;
  a.k = k;
  a.part_of.resize(n);
  for (std::uint64_t i = 0; i < n; ++i) a.part_of[order[i]] = static_cast<PartId>(i % k);
  a.ncon = constraints.ncon;
  a.part_sums = a.recompute_sums(constraints);
  a.eps_requested = a.eps_used = 0.05;
  a.balanced = within_balance(a.part_sums, constraints.column_sums(), k, a.eps_used);
  return a;
}

std::uint64_t edge_cut(const HomogenizedGraph& g, std::span<const PartId> part_of) {
  std::uint64_t cut = 0;
  for (VertexId v = 0; v < g.num_vertices(); ++v) {
    for (auto s : g.in_sources(v)) cut += part_of[s] != part_of[v];
  }
  return cut;
}

namespace {

PartitionBook book_skeleton(const HomogenizedGraph& g, const PartitionAssignment& first,
                            std::uint32_t T) {
  if (T == 0) throw ArgumentError("trainers per machine must be >= 1");
  if (first.part_of.size() != g.num_vertices()) {
    throw StructuralError("first-level assignment does not cover the graph");
  }
  PartitionBook book;
  book.first_level = first;
  book.trainers_per_machine = T;
  book.sub_part.assign(g.num_vertices(), 0);
  book.vertex_offsets = g.vertex_offsets();
  book.edge_offsets = g.edge_offsets();
  const auto dst = g.edge_destinations();
  book.edge_part.resize(dst.size());
  for (EdgeId e = 0; e < dst.size(); ++e) book.edge_part[e] = first.part_of[dst[e]];
  book.second_eps_used.assign(first.k, 0.0);
  book.second_relaxed.assign(first.k, false);
  return book;
}

void count_train(const HomogenizedGraph& g, PartitionBook& book) {
  const auto T = book.trainers_per_machine;
  book.sub_train_counts.assign(static_cast<std::size_t>(book.first_level.k) * T, 0);
  for (VertexId v = 0; v < g.num_vertices(); ++v) {
    if (g.mask(v) == SplitMask::Train) {
      ++book.sub_train_counts[book.first_level.part_of[v] * T + book.sub_part[v]];
    }
  }
}

std::vector<std::vector<VertexId>> members_by_part(const PartitionAssignment& a) {
  std::vector<std::vector<VertexId>> members(a.k);
  for (VertexId v = 0; v < a.part_of.size(); ++v) members[a.part_of[v]].push_back(v);
  return members;
}

}  // namespace

PartitionBook second_level_partition(const HomogenizedGraph& g, const PartitionAssignment& first,
                                     std::uint32_t T, double eps, std::uint64_t seed) {
  PartitionBook book = book_skeleton(g, first, T);
  const auto members = members_by_part(first);
  for (PartId p = 0; p < first.k; ++p) {
    book.second_eps_used[p] = eps;
    if (T == 1) continue;
    const auto& verts = members[p];
    if (verts.size() < T) {
      throw ConfigError("machine partition " + std::to_string(p) + " has " +
                        std::to_string(verts.size()) + " vertices, fewer than " +
                        std::to_string(T) + " trainers");
    }
    std::vector<std::int64_t> vwgt;
    vwgt.reserve(verts.size() * 2);
    for (auto v : verts) {
      vwgt.push_back(1);
      vwgt.push_back(g.mask(v) == SplitMask::Train ? 1 : 0);
    }
    std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
    for (std::uint32_t i = 0; i < verts.size(); ++i) {
      for (auto s : g.in_sources(verts[i])) {
        if (first.part_of[s] != p) continue;
        auto it = std::lower_bound(verts.begin(), verts.end(), s);
        edges.emplace_back(static_cast<std::uint32_t>(it - verts.begin()), i);
      }
    }
    WeightedGraph wg = build_weighted_graph(static_cast<std::uint32_t>(verts.size()), edges, 2,
                                            std::move(vwgt));
    MultilevelResult r = multilevel_partition(wg, T, eps, mix64(seed + p + 1));
    for (std::uint32_t i = 0; i < verts.size(); ++i) book.sub_part[verts[i]] = r.part[i];
    book.second_eps_used[p] = r.eps_used;
    book.second_relaxed[p] = r.relaxed || !r.balanced;
  }
  count_train(g, book);
  return book;
}

PartitionBook second_level_random(const HomogenizedGraph& g, const PartitionAssignment& first,
                                  std::uint32_t T, std::uint64_t seed) {
  PartitionBook book = book_skeleton(g, first, T);
  auto members = members_by_part(first);
  for (PartId p = 0; p < first.k; ++p) {
    auto& verts = members[p];
    StreamRng rng{seed, 0x2E7E, p};
    for (auto i = verts.size(); i > 1; --i) std::swap(verts[i - 1], verts[rng.uniform(i)]);
    // Deal train vertices and the rest separately so both stay balanced.
    std::uint64_t train_i = 0, other_i = 0;
    for (auto v : verts) {
      const bool train = g.mask(v) == SplitMask::Train;
      book.sub_part[v] = static_cast<std::uint32_t>((train ? train_i++ : other_i++) % T);
    }
    book.second_eps_used[p] = 0.0;
  }
  count_train(g, book);
  return book;
}

std::optional<std::uint64_t> PhysicalPartition::to_local(VertexId v) const {
  auto core = core_vertices();
  auto it = std::lower_bound(core.begin(), core.end(), v);
  if (it != core.end() && *it == v) return static_cast<std::uint64_t>(it - core.begin());
  auto halo = halo_vertices();
  it = std::lower_bound(halo.begin(), halo.end(), v);
  if (it != halo.end() && *it == v) return num_core + static_cast<std::uint64_t>(it - halo.begin());
  return std::nullopt;
}

bool PhysicalPartition::owns(VertexId v) const {
  auto core = core_vertices();
  return std::binary_search(core.begin(), core.end(), v);
}

SplitMask PhysicalPartition::mask_of(VertexId v) const {
  auto local = to_local(v);
  if (!local || *local >= num_core) throw OwnershipError("vertex " + std::to_string(v) + " is not core");
  return static_cast<SplitMask>(core_masks[*local]);
}

std::int32_t PhysicalPartition::label_of(VertexId v) const {
  auto local = to_local(v);
  if (!local || *local >= num_core) throw OwnershipError("vertex " + std::to_string(v) + " is not core");
  return core_labels.empty() ? -1 : core_labels[*local];
}

void PhysicalPartition::validate() const {
  const auto n = num_local();
  if (num_core > n) throw StructuralError("core count exceeds local count");
  auto core = core_vertices();
  auto halo = halo_vertices();
  if (!std::is_sorted(core.begin(), core.end()) || !std::is_sorted(halo.begin(), halo.end())) {
    throw StructuralError("core and halo ID lists must be ascending");
  }
  if (std::adjacent_find(core.begin(), core.end()) != core.end() ||
      std::adjacent_find(halo.begin(), halo.end()) != halo.end()) {
    throw StructuralError("duplicate local vertex");
  }
  for (auto h : halo) {
    if (std::binary_search(core.begin(), core.end(), h)) throw StructuralError("vertex both core and halo");
  }
  if (indptr.size() != n + 1 || indptr.front() != 0 || indptr.back() != indices.size() ||
      indices.size() != edge_ids.size() || !std::is_sorted(indptr.begin(), indptr.end())) {
    throw StructuralError("malformed local CSR");
  }
  for (auto l = num_core; l < n; ++l) {
    if (indptr[l] != indptr[l + 1]) throw StructuralError("halo vertex has owned adjacency");
  }
  for (auto s : indices) {
    if (s >= n) throw StructuralError("local source index out of range");
  }
  if (core_masks.size() != num_core) throw StructuralError("core mask length mismatch");
  if (!core_labels.empty() && core_labels.size() != num_core) {
    throw StructuralError("core label length mismatch");
  }
}

std::vector<std::uint64_t> owned_typed_vertices(const PartitionBook& book, PartId machine, TypeId t) {
  std::vector<std::uint64_t> out;
  const auto begin = book.vertex_offsets.begin(t);
  for (std::uint64_t i = 0; i < book.vertex_offsets.count(t); ++i) {
    if (book.first_level.part_of[begin + i] == machine) out.push_back(i);
  }
  return out;
}

std::vector<std::uint64_t> owned_typed_edges(const PartitionBook& book, PartId machine, TypeId et) {
  std::vector<std::uint64_t> out;
  const auto begin = book.edge_offsets.begin(et);
  for (std::uint64_t i = 0; i < book.edge_offsets.count(et); ++i) {
    if (book.edge_part[begin + i] == machine) out.push_back(i);
  }
  return out;
}

std::vector<PartitionShard> materialize_partitions(const Dataset& data, const PartitionBook& book) {
  const HomogenizedGraph& g = data.graph;
  const std::uint32_t k = book.num_partitions();
  std::vector<PartitionShard> shards(k);
  for (PartId p = 0; p < k; ++p) {
    PhysicalPartition& pp = shards[p].graph;
    pp.id = p;
    pp.vertex_offsets = g.vertex_offsets();
    pp.edge_offsets = g.edge_offsets();
    std::vector<VertexId> core, halo;
    for (VertexId v = 0; v < g.num_vertices(); ++v) {
      if (book.owner(v) == p) core.push_back(v);
    }
    for (auto v : core) {
      for (auto s : g.in_sources(v)) {
        if (book.owner(s) != p) halo.push_back(s);
      }
    }
    std::sort(halo.begin(), halo.end());
    halo.erase(std::unique(halo.begin(), halo.end()), halo.end());
    pp.num_core = core.size();
    pp.local_to_global = core;
    pp.local_to_global.insert(pp.local_to_global.end(), halo.begin(), halo.end());

    pp.indptr.assign(pp.num_local() + 1, 0);
    for (std::uint64_t l = 0; l < pp.num_core; ++l) {
      const VertexId v = core[l];
      auto srcs = g.in_sources(v);
      auto eids = g.in_edge_ids(v);
      for (std::size_t i = 0; i < srcs.size(); ++i) {
        pp.indices.push_back(*pp.to_local(srcs[i]));
        pp.edge_ids.push_back(eids[i]);
      }
      pp.indptr[l + 1] = pp.indices.size();
    }
    for (auto l = pp.num_core; l < pp.num_local(); ++l) pp.indptr[l + 1] = pp.indices.size();
    for (auto v : core) {
      pp.core_masks.push_back(g.masks()[v]);
      if (!data.labels.empty()) pp.core_labels.push_back(data.labels[v]);
    }

    auto& shard = shards[p];
    shard.vertex_features.resize(data.vertex_features.size());
    for (TypeId t = 0; t < data.vertex_features.size(); ++t) {
      if (!data.vertex_features[t]) continue;
      const FeatureMatrix& full = *data.vertex_features[t];
      const auto owned = owned_typed_vertices(book, p, t);
      FeatureMatrix fm(full.id_space, static_cast<std::uint32_t>(owned.size()), full.row_width);
      for (std::size_t i = 0; i < owned.size(); ++i) {
        std::copy_n(full.row(owned[i]).data(), full.row_width, fm.row(i).data());
      }
      shard.vertex_features[t] = std::move(fm);
    }
    shard.edge_features.resize(data.edge_features.size());
    for (TypeId e = 0; e < data.edge_features.size(); ++e) {
      if (!data.edge_features[e]) continue;
      const FeatureMatrix& full = *data.edge_features[e];
      const auto owned = owned_typed_edges(book, p, e);
      FeatureMatrix fm(full.id_space, static_cast<std::uint32_t>(owned.size()), full.row_width);
      for (std::size_t i = 0; i < owned.size(); ++i) {
        std::copy_n(full.row(owned[i]).data(), full.row_width, fm.row(i).data());
      }
      shard.edge_features[e] = std::move(fm);
    }
  }
  return shards;
}

PartitionBook partition_dataset(const Dataset& data, const PartitionOptions& opts) {
  const HomogenizedGraph& g = data.graph;
  const Constraints c = build_constraints(g);
  PartitionAssignment first =
      opts.random_first_level ? partition_random(g, opts.machines, c, opts.seed)
                              : partition_multiconstraint(g, opts.machines, c, opts.eps, opts.seed);
  PartitionBook book =
      opts.random_second_level
          ? second_level_random(g, first, opts.trainers_per_machine, opts.seed)
          : second_level_partition(g, first, opts.trainers_per_machine, opts.eps, opts.seed);
  book.schema = data.schema;
  for (const auto& f : data.vertex_features) book.vertex_feat_dims.push_back(f ? f->row_width : 0);
  for (const auto& f : data.edge_features) book.edge_feat_dims.push_back(f ? f->row_width : 0);
  book.edge_feat_dims.resize(data.schema.num_edge_types(), 0);
  book.vertex_feat_dims.resize(data.schema.num_vertex_types(), 0);
  book.num_classes = data.num_classes;
  return book;
}

}  // namespace hfg
