/**
 *  Copyright (c) 2026 by Contributors
 * @file kvstore.cc
 */
#include "hfg/kvstore.h"

#include <algorithm>
#include <cstring>
#include <mutex>
#include <numeric>

#include "hfg/error.h"
#include "hfg/wire.h"

namespace hfg {

KVShard::KVShard(IdSpace space, std::vector<std::uint64_t> owned, std::vector<float> rows)
    : space_(std::move(space)), num_rows_(owned.size()), rows_(std::move(rows)) {
  if (rows_.size() != num_rows_ * space_.width) {
    throw StructuralError("shard '" + space_.name + "' row data does not match owned ID count");
  }
  for (std::size_t i = 0; i < owned.size(); ++i) {
    if (owned[i] >= space_.count) throw RangeError("shard '" + space_.name + "' owns an out-of-range ID");
    if (i > 0 && owned[i] <= owned[i - 1]) {
      throw StructuralError("shard '" + space_.name + "' owned IDs must be strictly ascending");
    }
    if (!intervals_.empty() && intervals_.back().second == owned[i]) {
      ++intervals_.back().second;
    } else {
      interval_base_.push_back(i);
      intervals_.emplace_back(owned[i], owned[i] + 1);
    }
  }
}

std::optional<std::size_t> KVShard::row_of(std::uint64_t id) const {
  auto it = std::upper_bound(intervals_.begin(), intervals_.end(), id,
                             [](std::uint64_t v, const auto& iv) { return v < iv.first; });
  if (it == intervals_.begin()) return std::nullopt;
  --it;
  if (id >= it->second) return std::nullopt;
  return interval_base_[static_cast<std::size_t>(it - intervals_.begin())] + (id - it->first);
}

void KVShard::gather(std::span<const std::uint64_t> ids, float* out,
                     std::span<const std::uint64_t> out_rows) const {
  const std::size_t w = space_.width;
  std::shared_lock lk(mu_);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto r = row_of(ids[i]);
    if (!r) {
      throw OwnershipError("ID " + std::to_string(ids[i]) + " of space '" + space_.name +
                           "' is not owned here");
    }
    std::memcpy(out + out_rows[i] * w, rows_.data() + *r * w, w * sizeof(float));
  }
}

void KVShard::scatter(std::span<const std::uint64_t> ids, std::span<const float> rows) {
  const std::size_t w = space_.width;
  std::unique_lock lk(mu_);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto r = row_of(ids[i]);
    if (!r) {
      throw OwnershipError("ID " + std::to_string(ids[i]) + " of space '" + space_.name +
                           "' is not owned here");
    }
    std::memcpy(rows_.data() + *r * w, rows.data() + i * w, w * sizeof(float));
  }
}

KVStore::KVStore(PartId self, std::shared_ptr<const PartitionBook> book, RpcClient* client)
    : self_(self), book_(std::move(book)), client_(client) {
  if (!book_) throw ArgumentError("KVStore needs a partition book");
}

void KVStore::register_space(IdSpace space, std::optional<FeatureMatrix> local_rows) {
  if (spaces_.contains(space.name)) throw ConfigError("ID space '" + space.name + "' already registered");
  const auto& offsets = space.is_edge ? book_->edge_offsets : book_->vertex_offsets;
  if (space.type >= offsets.num_types() || offsets.count(space.type) != space.count) {
    throw ConfigError("ID space '" + space.name + "' does not match the partition book");
  }
  std::vector<std::uint64_t> owned = space.is_edge ? owned_typed_edges(*book_, self_, space.type)
                                                   : owned_typed_vertices(*book_, self_, space.type);
  std::vector<float> rows;
  if (local_rows) {
    if (local_rows->row_width != space.width || local_rows->num_rows != owned.size()) {
      throw StructuralError("rows for space '" + space.name + "' do not match owned IDs");
    }
    rows = std::move(local_rows->values);
  } else {
    rows.assign(owned.size() * space.width, 0.0f);
  }
  Entry e;
  e.space = space;
  e.shard = std::make_unique<KVShard>(space, std::move(owned), std::move(rows));
  spaces_.emplace(space.name, std::move(e));
}

void KVStore::register_schema_spaces(const PartitionShard& shard) {
  const auto& schema = book_->schema;
  for (TypeId t = 0; t < schema.num_vertex_types(); ++t) {
    IdSpace s{schema.vertex_types()[t], false, t, book_->vertex_offsets.count(t),
              t < book_->vertex_feat_dims.size() ? book_->vertex_feat_dims[t] : 0};
    std::optional<FeatureMatrix> rows;
    if (t < shard.vertex_features.size()) rows = shard.vertex_features[t];
    if (s.width > 0 && !rows) throw StructuralError("partition lacks features for '" + s.name + "'");
    register_space(std::move(s), std::move(rows));
  }
  for (TypeId e = 0; e < schema.num_edge_types(); ++e) {
    IdSpace s{schema.edge_types()[e].relation, true, e, book_->edge_offsets.count(e),
              e < book_->edge_feat_dims.size() ? book_->edge_feat_dims[e] : 0};
    std::optional<FeatureMatrix> rows;
    if (e < shard.edge_features.size()) rows = shard.edge_features[e];
    if (s.width > 0 && !rows) throw StructuralError("partition lacks features for '" + s.name + "'");
    register_space(std::move(s), std::move(rows));
  }
}

const KVStore::Entry& KVStore::entry(const std::string& name) const {
  auto it = spaces_.find(name);
  if (it == spaces_.end()) throw ArgumentError("unknown ID space '" + name + "'");
  return it->second;
}

const IdSpace& KVStore::space(const std::string& name) const { return entry(name).space; }

std::vector<std::string> KVStore::space_names() const {
  std::vector<std::string> out;
  for (const auto& [name, e] : spaces_) out.push_back(name);
  return out;
}

PartId KVStore::owner(const IdSpace& space, std::uint64_t id) const {
  if (space.is_edge) return book_->edge_owner(book_->edge_offsets.to_global(space.type, id));
  return book_->owner(book_->vertex_offsets.to_global(space.type, id));
}

void KVStore::check_range(const IdSpace& space, std::span<const std::uint64_t> ids) const {
  for (auto id : ids) {
    if (id >= space.count) {
      throw RangeError("ID " + std::to_string(id) + " out of range for space '" + space.name +
                       "' of size " + std::to_string(space.count));
    }
  }
}

void KVStore::pull_async(const std::string& name, std::span<const std::uint64_t> ids, float* out,
                         std::span<const std::uint64_t> out_rows, Done done) {
  const Entry& e = entry(name);
  check_range(e.space, ids);
  if (out_rows.size() != ids.size()) throw ArgumentError("pull output map length differs from ids");
  const std::size_t w = e.space.width;
  if (w == 0 || ids.empty()) {
    done(nullptr);
    return;
  }
  std::vector<std::uint64_t> local_ids;
  std::vector<std::uint64_t> local_rows;
  std::map<PartId, std::vector<std::size_t>> remote;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const PartId p = owner(e.space, ids[i]);
    if (p == self_) {
      local_ids.push_back(ids[i]);
      local_rows.push_back(out_rows[i]);
    } else {
      remote[p].push_back(i);
    }
  }
  if (!remote.empty() && client_ == nullptr) {
    throw StateError("pull of remote rows on a store without a client");
  }
  const std::size_t rows_per_rpc = std::max<std::size_t>(1, max_rpc_bytes_ / (w * sizeof(float)));
  struct Join {
    std::mutex mu;
    std::size_t remaining = 0;
    std::exception_ptr error;
    Done done;
    void finish(std::exception_ptr err) {
      bool last;
      {
        std::lock_guard lk(mu);
        if (err && !error) error = err;
        last = --remaining == 0;
      }
      if (last) done(error);
    }
  };
  auto join = std::make_shared<Join>();
  join->done = std::move(done);
  join->remaining = 1;
  for (const auto& [p, pos] : remote) join->remaining += (pos.size() + rows_per_rpc - 1) / rows_per_rpc;

  for (const auto& [p, pos] : remote) {
    for (std::size_t lo = 0; lo < pos.size(); lo += rows_per_rpc) {
      const std::size_t hi = std::min(pos.size(), lo + rows_per_rpc);
      PullRequest req;
      req.space = name;
      std::vector<std::uint64_t> dest_rows;
      for (std::size_t k = lo; k < hi; ++k) {
        req.ids.push_back(ids[pos[k]]);
        dest_rows.push_back(out_rows[pos[k]]);
      }
      const Bytes payload = encode(req);
      client_->call_async(
          p, Verb::PullData, payload,
          [this, join, out, w, dest_rows = std::move(dest_rows), p](std::exception_ptr err, Bytes resp) {
            if (!err) {
              try {
                ByteReader r(resp);
                const auto width = r.get<std::uint32_t>();
                const auto rows = r.get<std::uint32_t>();
                if (width != w || rows != dest_rows.size()) {
                  throw ProtocolError("partition " + std::to_string(p) + " returned a pull of wrong shape");
                }
                for (std::size_t i = 0; i < rows; ++i) {
                  r.get_span(std::span<float>(out + dest_rows[i] * w, w));
                }
                r.expect_done();
                remote_bytes_.fetch_add(static_cast<std::uint64_t>(rows) * w * sizeof(float));
              } catch (...) {
                err = std::current_exception();
              }
            }
            join->finish(err);
          });
    }
  }
  std::exception_ptr local_err;
  try {
    if (!local_ids.empty()) {
      if (!e.shard) throw OwnershipError("no local shard for space '" + name + "'");
      e.shard->gather(local_ids, out, local_rows);
      local_bytes_.fetch_add(local_ids.size() * w * sizeof(float));
    }
  } catch (...) {
    local_err = std::current_exception();
  }
  join->finish(local_err);
}

std::vector<float> KVStore::pull(const std::string& space, std::span<const std::uint64_t> ids) {
  const std::size_t w = entry(space).space.width;
  std::vector<float> out(ids.size() * w);
  std::vector<std::uint64_t> rows(ids.size());
  std::iota(rows.begin(), rows.end(), 0);
  std::promise<void> done;
  auto fut = done.get_future();
  pull_async(space, ids, out.data(), rows, [&done](std::exception_ptr err) {
    if (err) {
      done.set_exception(err);
    } else {
      done.set_value();
    }
  });
  fut.get();
  return out;
}

void KVStore::push(const std::string& name, std::span<const std::uint64_t> ids,
                   std::span<const float> rows) {
  const Entry& e = entry(name);
  const std::size_t w = e.space.width;
  if (rows.size() != ids.size() * w) throw ArgumentError("push rows do not match ids and width");
  check_range(e.space, ids);
  if (ids.empty() || w == 0) return;
  std::vector<std::uint64_t> local_ids;
  std::vector<float> local_rows;
  std::map<PartId, PushRequest> remote;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const PartId p = owner(e.space, ids[i]);
    const auto row = rows.subspan(i * w, w);
    if (p == self_) {
      local_ids.push_back(ids[i]);
      local_rows.insert(local_rows.end(), row.begin(), row.end());
    } else {
      auto& req = remote[p];
      req.space = name;
      req.width = static_cast<std::uint32_t>(w);
      req.ids.push_back(ids[i]);
      req.data.insert(req.data.end(), row.begin(), row.end());
    }
  }
  if (!remote.empty() && client_ == nullptr) {
    throw StateError("push of remote rows on a store without a client");
  }
  std::vector<std::future<Bytes>> acks;
  for (const auto& [p, req] : remote) acks.push_back(client_->call_async(p, Verb::PushData, encode(req)));
  if (!local_ids.empty()) e.shard->scatter(local_ids, local_rows);
  for (auto& f : acks) f.get();
}

std::vector<float> KVStore::local_gather(const std::string& name, std::span<const std::uint64_t> ids) const {
  const Entry& e = entry(name);
  check_range(e.space, ids);
  const std::size_t w = e.space.width;
  std::vector<float> out(ids.size() * w);
  std::vector<std::uint64_t> rows(ids.size());
  std::iota(rows.begin(), rows.end(), 0);
  e.shard->gather(ids, out.data(), rows);
  return out;
}

void KVStore::handle_pull(const Request& req, const Responder& resp) const {
  const PullRequest m = decode<PullRequest>(req.payload);
  const Entry& e = entry(m.space);
  check_range(e.space, m.ids);
  const std::size_t w = e.space.width;
  PullResponse out;
  out.width = static_cast<std::uint32_t>(w);
  out.rows = static_cast<std::uint32_t>(m.ids.size());
  out.data.resize(m.ids.size() * w);
  std::vector<std::uint64_t> pos(m.ids.size());
  std::iota(pos.begin(), pos.end(), 0);
  if (w > 0) e.shard->gather(m.ids, out.data.data(), pos);
  resp.reply(encode(out));
}

void KVStore::handle_push(const Request& req, const Responder& resp) {
  const PushRequest m = decode<PushRequest>(req.payload);
  const Entry& e = entry(m.space);
  check_range(e.space, m.ids);
  if (m.width != e.space.width) throw ArgumentError("push width does not match space '" + m.space + "'");
  e.shard->scatter(m.ids, m.data);
  resp.reply({});
}

void KVStore::install(RpcServer& server) {
  server.register_handler(Verb::PullData, [this](Request r, Responder s) { handle_pull(r, s); });
  server.register_handler(Verb::PushData, [this](Request r, Responder s) { handle_push(r, s); });
}

void KVStore::reset_counters() {
  local_bytes_ = 0;
  remote_bytes_ = 0;
}

}  // namespace hfg
