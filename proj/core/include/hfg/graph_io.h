/**
 *  Copyright (c) 2026 by Contributors
 * @file hfg/graph_io.h
 * @brief Dataset directory format.
 *
 * Layout of a dataset directory:
 *   schema.json              vertex types (name, count, feature file, mask
 *                            file, label file), edge types (src, relation,
 *                            dst, optional edge feature file), num_classes
 *   edges_<relation>.bin     little-endian u64 pairs (src typed, dst typed)
 *   feat_<type>.bin          "HFG1", u32 rows, u32 cols, 4 reserved bytes,
 *                            then f32 row-major values
 *   efeat_<relation>.bin     same layout, one row per edge of the type
 *   mask_<type>.bin          u8 per vertex (0 none, 1 train, 2 val, 3 test)
 *   labels_<type>.bin        little-endian i32 per vertex, -1 = unlabeled
 */
#ifndef HFG_GRAPH_IO_H_
#define HFG_GRAPH_IO_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hfg/bytes.h"
#include "hfg/graph.h"

namespace hfg {

struct Dataset {
  HeteroSchema schema;
  std::vector<std::uint64_t> vertex_counts;
  HomogenizedGraph graph;
  /// Indexed by vertex type / edge type; nullopt when the type has none.
  std::vector<std::optional<FeatureMatrix>> vertex_features;
  std::vector<std::optional<FeatureMatrix>> edge_features;
  /// Indexed by global vertex ID; empty when the dataset has no labels.
  std::vector<std::int32_t> labels;
  std::uint32_t num_classes = 0;
};

/// Reads and validates a dataset directory.
Dataset load_graph(const std::filesystem::path& dir);

/// Writes a dataset directory; edges are emitted in global edge ID order.
void save_dataset(const std::filesystem::path& dir, const Dataset& data);

Bytes read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::byte> data);

FeatureMatrix read_feature_file(const std::filesystem::path& path, const std::string& space);
void write_feature_file(const std::filesystem::path& path, const FeatureMatrix& m);

inline constexpr char kFeatureMagic[4] = {'H', 'F', 'G', '1'};
inline constexpr std::size_t kFeatureHeaderBytes = 16;

}  // namespace hfg

#endif  // HFG_GRAPH_IO_H_
