/**
 *  Copyright (c) 2026 by Contributors
 * @file collective.cc
 */
#include "hfg/collective.h"

#include "hfg/error.h"

namespace hfg {

std::vector<float> mean_in_rank_order(const std::vector<std::vector<float>>& contributions) {
  if (contributions.empty()) return {};
  std::vector<float> acc = contributions[0];
  for (std::size_t r = 1; r < contributions.size(); ++r) {
    const auto& v = contributions[r];
    if (v.size() != acc.size()) throw CollectiveError("allreduce vectors differ in length");
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += v[i];
  }
  const float n = static_cast<float>(contributions.size());
  for (auto& x : acc) x /= n;
  return acc;
}

void CollectiveCoordinator::install(RpcServer& server) {
  server.register_handler(Verb::Barrier, [this](Request r, Responder s) { handle(std::move(r), s); });
  server.register_handler(Verb::Allreduce, [this](Request r, Responder s) { handle(std::move(r), s); });
}

void CollectiveCoordinator::handle(Request req, Responder resp) {
  CollectiveRequest m = decode<CollectiveRequest>(req.payload);
  std::vector<Responder> waiters;
  Bytes out;
  {
    std::lock_guard lk(mu_);
    if (m.size == 0 || m.rank >= m.size) throw CollectiveError("bad rank/size in collective request");
    Group& g = groups_[m.group];
    if (g.size == 0) g.size = m.size;
    if (g.size != m.size) {
      throw CollectiveError("group " + std::to_string(m.group) + " size mismatch");
    }
    if (g.broken) throw CollectiveError("group " + std::to_string(m.group) + " is broken: " + g.reason);
    g.connections.insert(req.connection);
    Round& round = g.rounds[m.round];
    if (round.data.empty()) {
      round.data.resize(g.size);
      round.waiters.resize(g.size);
    }
    if (round.data[m.rank]) {
      throw CollectiveError("rank " + std::to_string(m.rank) + " arrived twice at round " +
                            std::to_string(m.round));
    }
    round.data[m.rank] = std::move(m.data);
    round.waiters[m.rank] = resp;
    if (++round.arrived < g.size) return;

    std::vector<std::vector<float>> contributions;
    contributions.reserve(g.size);
    for (auto& d : round.data) contributions.push_back(std::move(*d));
    waiters = std::move(round.waiters);
    g.rounds.erase(m.round);
    try {
      out = encode(CollectiveResponse{mean_in_rank_order(contributions)});
    } catch (const CollectiveError& e) {
      for (auto& w : waiters) w.fail(e);
      return;
    }
  }
  for (auto& w : waiters) w.reply(out);
}

void CollectiveCoordinator::connection_closed(std::uint64_t connection) {
  std::vector<Responder> to_fail;
  std::string reason;
  {
    std::lock_guard lk(mu_);
    for (auto& [id, g] : groups_) {
      if (!g.connections.contains(connection)) continue;
      g.broken = true;
      g.reason = "a member disconnected";
      reason = g.reason;
      for (auto& [r, round] : g.rounds) {
        for (auto& w : round.waiters) {
          if (w) to_fail.push_back(w);
        }
      }
      g.rounds.clear();
    }
  }
  const CollectiveError err("collective aborted: " + reason);
  for (auto& w : to_fail) w.fail(err);
}

CollectiveGroup::CollectiveGroup(RpcClient& client, std::uint32_t coordinator_peer,
                                 std::uint32_t group, std::uint32_t rank, std::uint32_t size)
    : client_(client), coordinator_(coordinator_peer), group_(group), rank_(rank), size_(size) {
  if (size == 0 || rank >= size) throw ArgumentError("collective rank must be below group size");
}

std::vector<float> CollectiveGroup::round_trip(Verb verb, std::span<const float> values) {
  CollectiveRequest req;
  req.group = group_;
  req.rank = rank_;
  req.size = size_;
  req.round = round_++;
  req.data.assign(values.begin(), values.end());
  try {
    return decode<CollectiveResponse>(client_.call(coordinator_, verb, encode(req))).data;
  } catch (const CollectiveError&) {
    throw;
  } catch (const TransportError& e) {
    throw CollectiveError(std::string("collective failed: ") + e.what());
  }
}

void CollectiveGroup::barrier() { round_trip(Verb::Barrier, {}); }

std::vector<float> CollectiveGroup::allreduce_mean(std::span<const float> values) {
  return round_trip(Verb::Allreduce, values);
}

}  // namespace hfg
