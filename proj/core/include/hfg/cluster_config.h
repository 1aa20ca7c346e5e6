/**
 *  Copyright (c) 2026 by Contributors
 * @file hfg/cluster_config.h
 * @brief Cluster member list: one `rank host port` line per member.
 *
 * Blank lines and lines starting with '#' are ignored.
 */
#ifndef HFG_CLUSTER_CONFIG_H_
#define HFG_CLUSTER_CONFIG_H_

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "hfg/rpc.h"

namespace hfg {

struct ClusterConfig {
  /// Indexed by rank.
  std::vector<Endpoint> members;

  std::size_t size() const { return members.size(); }
  std::string str() const;
};

/// Throws ConfigError naming the line for malformed lines, non-contiguous
/// ranks or a repeated (host, port).
ClusterConfig parse_cluster_config(std::string_view text);
ClusterConfig load_cluster_config(const std::filesystem::path& path);

/// `n` members on 127.0.0.1 with consecutive ports from `base_port`.
ClusterConfig localhost_cluster(std::uint32_t n, std::uint16_t base_port);

}  // namespace hfg

#endif  // HFG_CLUSTER_CONFIG_H_
