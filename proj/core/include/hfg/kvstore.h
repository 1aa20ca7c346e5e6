/**
 *  Copyright (c) 2026 by Contributors
 * @file hfg/kvstore.h
 * @brief Distributed feature store: one ID space per vertex and edge type,
 *        rows routed to the machine that owns them.
 */
#ifndef HFG_KVSTORE_H_
#define HFG_KVSTORE_H_

#include <atomic>
#include <cstdint>
#include <exception>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <vector>

#include "hfg/partition.h"
#include "hfg/rpc.h"

namespace hfg {

struct IdSpace {
  std::string name;
  bool is_edge = false;
  /// Vertex type or edge type index.
  TypeId type = 0;
  std::uint64_t count = 0;
  std::uint32_t width = 0;
};

/// The rows of one space owned by this machine.
class KVShard {
 public:
  KVShard() = default;
  /// `owned` must be ascending type-local IDs; `rows` holds one row per
  /// owned ID in the same order.
  KVShard(IdSpace space, std::vector<std::uint64_t> owned, std::vector<float> rows);

  const IdSpace& space() const { return space_; }
  std::size_t num_rows() const { return num_rows_; }
  /// Owned IDs as half-open intervals.
  const std::vector<std::pair<std::uint64_t, std::uint64_t>>& intervals() const { return intervals_; }

  std::optional<std::size_t> row_of(std::uint64_t id) const;
  bool owns(std::uint64_t id) const { return row_of(id).has_value(); }

  /// Writes ids[i]'s row to out + out_rows[i] * width. Throws
  /// OwnershipError for an ID this shard does not hold.
  void gather(std::span<const std::uint64_t> ids, float* out,
              std::span<const std::uint64_t> out_rows) const;
  void scatter(std::span<const std::uint64_t> ids, std::span<const float> rows);

 private:
  IdSpace space_;
  std::vector<std::pair<std::uint64_t, std::uint64_t>> intervals_;
  std::vector<std::size_t> interval_base_;
  std::size_t num_rows_ = 0;
  std::vector<float> rows_;
  mutable std::shared_mutex mu_;
};

class KVStore {
 public:
  using Done = std::function<void(std::exception_ptr)>;

  /// `client` may be null for a single-machine store; it must list every
  /// machine by partition ID.
  KVStore(PartId self, std::shared_ptr<const PartitionBook> book, RpcClient* client);

  /// Throws ConfigError when the name is taken.
  void register_space(IdSpace space, std::optional<FeatureMatrix> local_rows);
  /// One space per vertex type and per edge type, filled from a shard.
  void register_schema_spaces(const PartitionShard& shard);

  /// Sets the client used for remote rows; not thread-safe against pulls.
  void attach_client(RpcClient* client) { client_ = client; }

  bool has_space(const std::string& name) const { return spaces_.contains(name); }
  const IdSpace& space(const std::string& name) const;
  std::size_t num_spaces() const { return spaces_.size(); }
  std::vector<std::string> space_names() const;

  PartId owner(const IdSpace& space, std::uint64_t id) const;

  /// Row i of the result is ids[i]'s row.
  std::vector<float> pull(const std::string& space, std::span<const std::uint64_t> ids);
  /// Writes ids[i]'s row to out + out_rows[i] * width; `out` must stay valid
  /// until `done` runs. Remote requests are issued before the local gather
  /// so they overlap. Range errors throw before any network call.
  void pull_async(const std::string& space, std::span<const std::uint64_t> ids, float* out,
                  std::span<const std::uint64_t> out_rows, Done done);
  void push(const std::string& space, std::span<const std::uint64_t> ids, std::span<const float> rows);
  /// No network. Throws OwnershipError for non-owned IDs.
  std::vector<float> local_gather(const std::string& space, std::span<const std::uint64_t> ids) const;

  /// Serves PULL_DATA and PUSH_DATA.
  void install(RpcServer& server);
  void set_max_rpc_bytes(std::size_t bytes) { max_rpc_bytes_ = bytes; }

  std::uint64_t local_bytes() const { return local_bytes_.load(); }
  std::uint64_t remote_bytes() const { return remote_bytes_.load(); }
  void reset_counters();

 private:
  struct Entry {
    IdSpace space;
    std::unique_ptr<KVShard> shard;
  };
  const Entry& entry(const std::string& name) const;
  void check_range(const IdSpace& space, std::span<const std::uint64_t> ids) const;
  void handle_pull(const Request& req, const Responder& resp) const;
  void handle_push(const Request& req, const Responder& resp);

  PartId self_;
  std::shared_ptr<const PartitionBook> book_;
  RpcClient* client_;
  std::map<std::string, Entry> spaces_;
  std::size_t max_rpc_bytes_ = kMaxRpcBytes;
  std::atomic<std::uint64_t> local_bytes_{0};
  std::atomic<std::uint64_t> remote_bytes_{0};
};

}  // namespace hfg

#endif  // HFG_KVSTORE_H_
