/**
 *  Copyright (c) 2026 by Contributors
 * @file cluster_config.cc
 */
#include "hfg/cluster_config.h"

#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "hfg/error.h"

namespace hfg {

std::string ClusterConfig::str() const {
  std::ostringstream out;
  for (std::size_t r = 0; r < members.size(); ++r) {
    out << r << ' ' << members[r].host << ' ' << members[r].port << '\n';
  }
  return out.str();
}

ClusterConfig parse_cluster_config(std::string_view text) {
  std::map<std::uint32_t, Endpoint> by_rank;
  std::set<std::pair<std::string, std::uint16_t>> seen;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream fields(line);
    long long rank = -1;
    std::string host;
    long long port = -1;
    std::string extra;
    auto bad = [&](const std::string& why) {
      return ConfigError("cluster config line " + std::to_string(lineno) + ": " + why);
    };
    if (!(fields >> rank >> host >> port)) throw bad("expected 'rank host port'");
    if (fields >> extra) throw bad("unexpected trailing field '" + extra + "'");
    if (rank < 0 || rank > 65535) throw bad("rank out of range");
    if (port < 1 || port > 65535) throw bad("port out of range");
    if (by_rank.contains(static_cast<std::uint32_t>(rank))) throw bad("rank " + std::to_string(rank) + " repeated");
    if (!seen.emplace(host, static_cast<std::uint16_t>(port)).second) {
      throw bad("endpoint " + host + ":" + std::to_string(port) + " repeated");
    }
    by_rank[static_cast<std::uint32_t>(rank)] = Endpoint{host, static_cast<std::uint16_t>(port)};
  }
  if (by_rank.empty()) throw ConfigError("cluster config lists no members");
  ClusterConfig cfg;
  for (const auto& [rank, ep] : by_rank) {
    if (rank != cfg.members.size()) {
      throw ConfigError("cluster config ranks are not contiguous from 0: missing rank " +
                        std::to_string(cfg.members.size()));
    }
    cfg.members.push_back(ep);
  }
  return cfg;
}

ClusterConfig load_cluster_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path.string(), "cannot open cluster config");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_cluster_config(buf.str());
}

ClusterConfig localhost_cluster(std::uint32_t n, std::uint16_t base_port) {
  ClusterConfig cfg;
  for (std::uint32_t r = 0; r < n; ++r) {
    cfg.members.push_back({"127.0.0.1", static_cast<std::uint16_t>(base_port + r)});
  }
  return cfg;
}

}  // namespace hfg
