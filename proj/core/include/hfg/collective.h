/**
 *  Copyright (c) 2026 by Contributors
 * @file hfg/collective.h
 * @brief Barrier and mean-allreduce among a fixed group of members.
 *
 * Topology is gather-to-coordinator: every member sends its vector to the
 * coordinator hosted by the rank-0 node, which sums contributions in member
 * rank order, divides by the group size and sends the same bytes back to
 * everyone.
 */
#ifndef HFG_COLLECTIVE_H_
#define HFG_COLLECTIVE_H_

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "hfg/rpc.h"

namespace hfg {

/// The fixed-order reduction used by the coordinator: sum in rank order,
/// then divide elementwise by the member count.
std::vector<float> mean_in_rank_order(const std::vector<std::vector<float>>& contributions);

class CollectiveCoordinator {
 public:
  /// Serves BARRIER and ALLREDUCE requests.
  void handle(Request req, Responder resp);
  /// Fails every pending round of groups the connection took part in and
  /// marks those groups broken.
  void connection_closed(std::uint64_t connection);

  void install(RpcServer& server);

 private:
  struct Round {
    std::vector<std::optional<std::vector<float>>> data;
    std::vector<Responder> waiters;
    std::uint32_t arrived = 0;
  };
  struct Group {
    std::uint32_t size = 0;
    bool broken = false;
    std::string reason;
    std::set<std::uint64_t> connections;
    std::map<std::uint64_t, Round> rounds;
  };

  std::mutex mu_;
  std::map<std::uint32_t, Group> groups_;
};

/// One member's handle. Calls must come from a single thread per member.
class CollectiveGroup {
 public:
  CollectiveGroup(RpcClient& client, std::uint32_t coordinator_peer, std::uint32_t group,
                  std::uint32_t rank, std::uint32_t size);

  void barrier();
  std::vector<float> allreduce_mean(std::span<const float> values);

  std::uint32_t rank() const { return rank_; }
  std::uint32_t size() const { return size_; }

 private:
  std::vector<float> round_trip(Verb verb, std::span<const float> values);

  RpcClient& client_;
  std::uint32_t coordinator_;
  std::uint32_t group_;
  std::uint32_t rank_;
  std::uint32_t size_;
  std::uint64_t round_ = 0;
};

}  // namespace hfg

#endif  // HFG_COLLECTIVE_H_
