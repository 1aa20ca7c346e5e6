/**
 *  Copyright (c) 2026 by Contributors
 * @file graph.cc
 * @brief Homogenization and CSR accessors.
 */
#include "hfg/graph.h"

#include <algorithm>
#include <numeric>
#include <set>

#include "hfg/error.h"

namespace hfg {

HeteroSchema::HeteroSchema(std::vector<std::string> vertex_types,
                           std::vector<EdgeType> edge_types)
    : vertex_types_(std::move(vertex_types)), edge_types_(std::move(edge_types)) {
  std::set<std::string> seen(vertex_types_.begin(), vertex_types_.end());
  if (seen.size() != vertex_types_.size()) {
    throw StructuralError("duplicate vertex type name in schema");
  }
  std::set<std::string> relations;
  for (const auto& et : edge_types_) {
    if (!relations.insert(et.relation).second) {
      throw StructuralError("duplicate relation name '" + et.relation + "' in schema");
    }
    edge_src_.push_back(vertex_type_index(et.src_type));
    edge_dst_.push_back(vertex_type_index(et.dst_type));
  }
}

TypeId HeteroSchema::vertex_type_index(const std::string& name) const {
  auto it = std::find(vertex_types_.begin(), vertex_types_.end(), name);
  if (it == vertex_types_.end()) {
    throw StructuralError("unknown vertex type '" + name + "'");
  }
  return static_cast<TypeId>(it - vertex_types_.begin());
}

TypeId HeteroSchema::edge_type_index(const std::string& relation) const {
  auto it = std::find_if(edge_types_.begin(), edge_types_.end(),
                         [&](const EdgeType& e) { return e.relation == relation; });
  if (it == edge_types_.end()) {
    throw StructuralError("unknown relation '" + relation + "'");
  }
  return static_cast<TypeId>(it - edge_types_.begin());
}

TypeOffsets::TypeOffsets(std::span<const std::uint64_t> counts) {
  offsets_.resize(counts.size() + 1, 0);
  std::partial_sum(counts.begin(), counts.end(), offsets_.begin() + 1);
}

TypeOffsets TypeOffsets::from_offsets(std::vector<std::uint64_t> offsets) {
  if (offsets.empty() || offsets.front() != 0 ||
      !std::is_sorted(offsets.begin(), offsets.end())) {
    throw StructuralError("type offsets must start at 0 and be nondecreasing");
  }
  TypeOffsets t;
  t.offsets_ = std::move(offsets);
  return t;
}

std::uint64_t TypeOffsets::to_global(TypeId t, std::uint64_t typed_id) const {
  if (t >= num_types()) {
    throw RangeError("type index " + std::to_string(t) + " out of range");
  }
  if (typed_id >= count(t)) {
    throw RangeError("typed id " + std::to_string(typed_id) + " out of range for type " +
                     std::to_string(t) + " (count " + std::to_string(count(t)) + ")");
  }
  return offsets_[t] + typed_id;
}

TypeId TypeOffsets::type_of(std::uint64_t global) const {
  if (global >= total()) {
    throw RangeError("global id " + std::to_string(global) + " out of range (total " +
                     std::to_string(total()) + ")");
  }
  // Last offset <= global; empty types share offsets, upper_bound skips them.
  auto it = std::upper_bound(offsets_.begin(), offsets_.end(), global);
  return static_cast<TypeId>(it - offsets_.begin() - 1);
}

TypedId TypeOffsets::to_typed(std::uint64_t global) const {
  TypeId t = type_of(global);
  return {t, global - offsets_[t]};
}

HomogenizedGraph::HomogenizedGraph(TypeOffsets vertex_offsets, TypeOffsets edge_offsets,
                                   std::vector<std::uint64_t> indptr,
                                   std::vector<VertexId> indices,
                                   std::vector<EdgeId> edge_ids,
                                   std::vector<std::uint8_t> masks)
    : vertex_offsets_(std::move(vertex_offsets)),
      edge_offsets_(std::move(edge_offsets)),
      indptr_(std::move(indptr)),
      indices_(std::move(indices)),
      edge_ids_(std::move(edge_ids)),
      masks_(std::move(masks)) {
  const std::uint64_t n = vertex_offsets_.total();
  if (masks_.empty()) masks_.assign(n, 0);
  if (indptr_.size() != n + 1) throw StructuralError("indptr length must be |V|+1");
  if (indptr_.front() != 0 || !std::is_sorted(indptr_.begin(), indptr_.end())) {
    throw StructuralError("indptr must start at 0 and be nondecreasing");
  }
  if (indptr_.back() != indices_.size() || indices_.size() != edge_ids_.size()) {
    throw StructuralError("indptr end, indices and edge ids disagree on edge count");
  }
  if (edge_offsets_.total() != indices_.size()) {
    throw StructuralError("edge type offsets do not cover the edge count");
  }
  if (masks_.size() != n) throw StructuralError("mask length must be |V|");
  for (auto m : masks_) {
    if (m > 3) throw StructuralError("mask value must be in 0..3");
  }
  for (auto s : indices_) {
    if (s >= n) throw StructuralError("CSR source index out of vertex range");
  }
}

void HomogenizedGraph::check_vertex(VertexId v) const {
  if (v >= num_vertices()) {
    throw RangeError("vertex " + std::to_string(v) + " out of range (|V| = " +
                     std::to_string(num_vertices()) + ")");
  }
}

std::span<const VertexId> HomogenizedGraph::in_sources(VertexId v) const {
  check_vertex(v);
  return {indices_.data() + indptr_[v], indptr_[v + 1] - indptr_[v]};
}

std::span<const EdgeId> HomogenizedGraph::in_edge_ids(VertexId v) const {
  check_vertex(v);
  return {edge_ids_.data() + indptr_[v], indptr_[v + 1] - indptr_[v]};
}

std::uint64_t HomogenizedGraph::in_degree(VertexId v) const {
  check_vertex(v);
  return indptr_[v + 1] - indptr_[v];
}

std::vector<InEdge> HomogenizedGraph::in_neighbors(VertexId v) const {
  auto src = in_sources(v);
  auto eid = in_edge_ids(v);
  std::vector<InEdge> out(src.size());
  for (std::size_t i = 0; i < src.size(); ++i) out[i] = {src[i], eid[i]};
  return out;
}

std::vector<std::pair<VertexId, VertexId>> HomogenizedGraph::edge_endpoints() const {
  std::vector<std::pair<VertexId, VertexId>> out(num_edges());
  for (VertexId v = 0; v < num_vertices(); ++v) {
    for (auto i = indptr_[v]; i < indptr_[v + 1]; ++i) {
      out[edge_ids_[i]] = {indices_[i], v};
    }
  }
  return out;
}

std::vector<VertexId> HomogenizedGraph::edge_destinations() const {
  std::vector<VertexId> out(num_edges());
  for (VertexId v = 0; v < num_vertices(); ++v) {
    for (auto i = indptr_[v]; i < indptr_[v + 1]; ++i) out[edge_ids_[i]] = v;
  }
  return out;
}

std::vector<std::uint64_t> HomogenizedGraph::total_degrees() const {
  std::vector<std::uint64_t> deg(num_vertices(), 0);
  for (VertexId v = 0; v < num_vertices(); ++v) {
    deg[v] += indptr_[v + 1] - indptr_[v];
    for (auto i = indptr_[v]; i < indptr_[v + 1]; ++i) ++deg[indices_[i]];
  }
  return deg;
}

HomogenizedGraph homogenize(const HeteroSchema& schema,
                            std::span<const std::uint64_t> vertex_counts,
                            std::span<const TypedEdgeList> typed_edges,
                            std::vector<std::uint8_t> masks) {
  if (vertex_counts.size() != schema.num_vertex_types()) {
    throw StructuralError("vertex count list does not match schema vertex types");
  }
  if (typed_edges.size() != schema.num_edge_types()) {
    throw StructuralError("edge list count does not match schema edge types");
  }
  TypeOffsets voff(vertex_counts);
  std::vector<std::uint64_t> ecounts;
  for (const auto& list : typed_edges) ecounts.push_back(list.size());
  TypeOffsets eoff{std::span<const std::uint64_t>(ecounts)};

  const std::uint64_t n = voff.total();
  const std::uint64_t m = eoff.total();
  std::vector<VertexId> src(m), dst(m);
  for (TypeId et = 0; et < typed_edges.size(); ++et) {
    const TypeId st = schema.edge_src_type(et);
    const TypeId dt = schema.edge_dst_type(et);
    const auto& list = typed_edges[et];
    for (std::size_t i = 0; i < list.size(); ++i) {
      const auto [s, d] = list[i];
      if (s >= voff.count(st) || d >= voff.count(dt)) {
        throw StructuralError("edge type '" + schema.edge_types()[et].relation +
                              "' index " + std::to_string(i) + ": endpoint (" +
                              std::to_string(s) + ", " + std::to_string(d) +
                              ") out of declared range");
      }
      const EdgeId e = eoff.begin(et) + i;
      src[e] = voff.begin(st) + s;
      dst[e] = voff.begin(dt) + d;
    }
  }

  // Counting sort by destination; iterating edges in ID order keeps each
  // destination's run sorted by global edge ID.
  std::vector<std::uint64_t> indptr(n + 1, 0);
  for (EdgeId e = 0; e < m; ++e) ++indptr[dst[e] + 1];
  std::partial_sum(indptr.begin(), indptr.end(), indptr.begin());
  std::vector<std::uint64_t> cursor(indptr.begin(), indptr.end() - 1);
  std::vector<VertexId> indices(m);
  std::vector<EdgeId> edge_ids(m);
  for (EdgeId e = 0; e < m; ++e) {
    const auto pos = cursor[dst[e]]++;
    indices[pos] = src[e];
    edge_ids[pos] = e;
  }
  return HomogenizedGraph(std::move(voff), std::move(eoff), std::move(indptr),
                          std::move(indices), std::move(edge_ids), std::move(masks));
}

}  // namespace hfg
