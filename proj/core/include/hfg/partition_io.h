/**
 *  Copyright (c) 2026 by Contributors
 * @file hfg/partition_io.h
 * @brief On-disk layout of a partitioned dataset.
 *
 *   <out>/book.json             two-level assignment, edge ownership,
 *                               relaxation metadata, per-partition constraint
 *                               sums, schema and feature dimensions
 *   <out>/part<k>/graph.bin     local CSR + ID maps + core masks/labels
 *   <out>/part<k>/feat_<type>.bin, efeat_<relation>.bin
 *
 * graph.bin layout (little-endian): magic "HFP1", u32 version, u32 part id,
 * u64 num_core, u64 num_local, u64 num_owned_edges, u32 #vertex types,
 * u32 #edge types, u64 vertex type offsets[], u64 edge type offsets[],
 * u64 local_to_global[num_local], u64 indptr[num_local+1],
 * u64 indices[num_owned_edges], u64 edge_ids[num_owned_edges],
 * u8 core_masks[num_core], u8 has_labels, i32 core_labels[num_core] if set.
 */
#ifndef HFG_PARTITION_IO_H_
#define HFG_PARTITION_IO_H_

#include <filesystem>

#include "hfg/bytes.h"
#include "hfg/partition.h"

namespace hfg {

void save_book(const std::filesystem::path& dir, const PartitionBook& book);
PartitionBook load_book(const std::filesystem::path& dir);

Bytes encode_physical_partition(const PhysicalPartition& part);
PhysicalPartition decode_physical_partition(std::span<const std::byte> data);

/// Writes <dir>/part<k>/.
void save_partition(const std::filesystem::path& dir, std::uint32_t k, const PartitionShard& shard,
                    const HeteroSchema& schema);
PartitionShard load_partition(const std::filesystem::path& dir, std::uint32_t k,
                              const PartitionBook& book);

/// Writes book.json and every part<k>/ directory.
void save_partitioned(const std::filesystem::path& dir, const PartitionBook& book,
                      const std::vector<PartitionShard>& shards);

}  // namespace hfg

#endif  // HFG_PARTITION_IO_H_
