/**
 *  Copyright (c) 2026 by Contributors
 * @file hfg/graph.h
 * @brief Heterogeneous schema, homogenized in-edge CSR, and feature matrices.
 *
 * All vertices share one global ID space in which the vertices of a type
 * occupy a contiguous interval, ordered by the schema's type order. Edges are
 * numbered the same way per edge type, in input order. Adjacency is stored as
 * a destination-grouped CSR (in-edges), sorted by destination and then by
 * global edge ID.
 */
#ifndef HFG_GRAPH_H_
#define HFG_GRAPH_H_

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace hfg {

using VertexId = std::uint64_t;
using EdgeId = std::uint64_t;
using TypeId = std::uint32_t;
using PartId = std::uint32_t;

/// Per-vertex split membership.
enum class SplitMask : std::uint8_t { None = 0, Train = 1, Val = 2, Test = 3 };

struct TypedId {
  TypeId type = 0;
  std::uint64_t id = 0;
  friend bool operator==(const TypedId&, const TypedId&) = default;
};

struct EdgeType {
  std::string src_type;
  std::string relation;
  std::string dst_type;
  friend bool operator==(const EdgeType&, const EdgeType&) = default;
};

class HeteroSchema {
 public:
  HeteroSchema() = default;
  HeteroSchema(std::vector<std::string> vertex_types,
               std::vector<EdgeType> edge_types);

  const std::vector<std::string>& vertex_types() const { return vertex_types_; }
  const std::vector<EdgeType>& edge_types() const { return edge_types_; }
  std::size_t num_vertex_types() const { return vertex_types_.size(); }
  std::size_t num_edge_types() const { return edge_types_.size(); }

  TypeId vertex_type_index(const std::string& name) const;
  TypeId edge_type_index(const std::string& relation) const;
  TypeId edge_src_type(TypeId etype) const { return edge_src_[etype]; }
  TypeId edge_dst_type(TypeId etype) const { return edge_dst_[etype]; }

  friend bool operator==(const HeteroSchema& a, const HeteroSchema& b) {
    return a.vertex_types_ == b.vertex_types_ && a.edge_types_ == b.edge_types_;
  }

 private:
  std::vector<std::string> vertex_types_;
  std::vector<EdgeType> edge_types_;
  std::vector<TypeId> edge_src_;
  std::vector<TypeId> edge_dst_;
};

struct InEdge {
  VertexId src = 0;
  EdgeId edge = 0;
  friend bool operator==(const InEdge&, const InEdge&) = default;
};

/// Maps between type-local and global IDs given per-type counts.
class TypeOffsets {
 public:
  TypeOffsets() : offsets_{0} {}
  explicit TypeOffsets(std::span<const std::uint64_t> counts);
  static TypeOffsets from_offsets(std::vector<std::uint64_t> offsets);

  std::size_t num_types() const { return offsets_.size() - 1; }
  std::uint64_t total() const { return offsets_.back(); }
  std::uint64_t count(TypeId t) const { return offsets_[t + 1] - offsets_[t]; }
  std::uint64_t begin(TypeId t) const { return offsets_[t]; }
  const std::vector<std::uint64_t>& offsets() const { return offsets_; }

  /// Throws RangeError when out of range.
  std::uint64_t to_global(TypeId t, std::uint64_t typed_id) const;
  TypedId to_typed(std::uint64_t global) const;
  TypeId type_of(std::uint64_t global) const;

  friend bool operator==(const TypeOffsets&, const TypeOffsets&) = default;

 private:
  std::vector<std::uint64_t> offsets_;
};

class HomogenizedGraph {
 public:
  HomogenizedGraph() = default;
  HomogenizedGraph(TypeOffsets vertex_offsets, TypeOffsets edge_offsets,
                   std::vector<std::uint64_t> indptr,
                   std::vector<VertexId> indices, std::vector<EdgeId> edge_ids,
                   std::vector<std::uint8_t> masks);

  std::uint64_t num_vertices() const { return vertex_offsets_.total(); }
  std::uint64_t num_edges() const { return indices_.size(); }
  const TypeOffsets& vertex_offsets() const { return vertex_offsets_; }
  const TypeOffsets& edge_offsets() const { return edge_offsets_; }

  VertexId to_global(TypeId t, std::uint64_t typed_id) const {
    return vertex_offsets_.to_global(t, typed_id);
  }
  TypedId to_typed(VertexId v) const { return vertex_offsets_.to_typed(v); }
  TypeId vertex_type(VertexId v) const { return vertex_offsets_.type_of(v); }
  TypeId edge_type(EdgeId e) const { return edge_offsets_.type_of(e); }

  /// Edges whose destination is v, in stored order.
  std::vector<InEdge> in_neighbors(VertexId v) const;
  std::span<const VertexId> in_sources(VertexId v) const;
  std::span<const EdgeId> in_edge_ids(VertexId v) const;
  std::uint64_t in_degree(VertexId v) const;

  const std::vector<std::uint64_t>& indptr() const { return indptr_; }
  const std::vector<VertexId>& indices() const { return indices_; }
  const std::vector<EdgeId>& edge_ids() const { return edge_ids_; }
  const std::vector<std::uint8_t>& masks() const { return masks_; }
  SplitMask mask(VertexId v) const { return static_cast<SplitMask>(masks_[v]); }

  /// (src, dst) for every global edge ID.
  std::vector<std::pair<VertexId, VertexId>> edge_endpoints() const;
  /// Destination vertex of every global edge ID.
  std::vector<VertexId> edge_destinations() const;
  /// Out-degree plus in-degree for every vertex.
  std::vector<std::uint64_t> total_degrees() const;

 private:
  void check_vertex(VertexId v) const;

  TypeOffsets vertex_offsets_;
  TypeOffsets edge_offsets_;
  std::vector<std::uint64_t> indptr_{0};
  std::vector<VertexId> indices_;
  std::vector<EdgeId> edge_ids_;
  std::vector<std::uint8_t> masks_;
};

/// Row-major f32 matrix; row index is the type-local ID.
struct FeatureMatrix {
  std::string id_space;
  std::uint32_t num_rows = 0;
  std::uint32_t row_width = 0;
  std::vector<float> values;

  FeatureMatrix() = default;
  FeatureMatrix(std::string space, std::uint32_t rows, std::uint32_t width)
      : id_space(std::move(space)),
        num_rows(rows),
        row_width(width),
        values(static_cast<std::size_t>(rows) * width, 0.0f) {}

  std::span<const float> row(std::uint64_t i) const {
    return {values.data() + i * row_width, row_width};
  }
  std::span<float> row(std::uint64_t i) {
    return {values.data() + i * row_width, row_width};
  }
};

using TypedEdgeList = std::vector<std::pair<std::uint64_t, std::uint64_t>>;

/// Builds the homogenized graph. `typed_edges[e]` holds the edges of edge
/// type e as (src typed ID, dst typed ID). `masks` is indexed by global ID and
/// may be empty (all None).
HomogenizedGraph homogenize(const HeteroSchema& schema,
                            std::span<const std::uint64_t> vertex_counts,
                            std::span<const TypedEdgeList> typed_edges,
                            std::vector<std::uint8_t> masks = {});

}  // namespace hfg

#endif  // HFG_GRAPH_H_
