/**
 *  Copyright (c) 2026 by Contributors
 * @file sampler.cc
 */
#include "hfg/sampler.h"

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <mutex>
#include <unordered_map>

#include "hfg/error.h"
#include "hfg/worker_pool.h"

namespace hfg {

void FanoutPlan::validate() const {
  if (fanouts.empty()) throw ArgumentError("fanout plan has no layers");
  for (auto f : fanouts) {
    if (f == 0) throw ArgumentError("fanout must be >= 1 or FULL");
  }
}

BatchScheduler::BatchScheduler(std::vector<std::uint64_t> ids, std::size_t batch_size,
                               std::uint64_t seed, std::optional<std::size_t> max_batches)
    : ids_(std::move(ids)), batch_size_(batch_size), seed_(seed), max_batches_(max_batches) {
  if (ids_.empty()) throw ConfigError("training set is empty");
  if (batch_size_ == 0) throw ArgumentError("batch size must be >= 1");
  if (max_batches_ && *max_batches_ == 0) throw ArgumentError("max batches per epoch must be >= 1");
}

std::uint64_t BatchScheduler::epoch_seed(std::uint64_t seed, std::uint64_t epoch) {
  return StreamRng({seed, epoch, 0x45504F4348ULL}).next();
}

std::vector<std::uint64_t> BatchScheduler::permutation(std::span<const std::uint64_t> ids,
                                                       std::uint64_t epoch_seed) {
  std::vector<std::uint64_t> out(ids.begin(), ids.end());
  StreamRng rng({epoch_seed, 0x5045524DULL});
  for (std::size_t i = out.size(); i > 1; --i) {
    const auto j = rng.uniform(i);
    std::swap(out[i - 1], out[j]);
  }
  return out;
}

std::size_t BatchScheduler::batches_per_epoch() const {
  const std::size_t n = (ids_.size() + batch_size_ - 1) / batch_size_;
  return max_batches_ ? std::min(n, *max_batches_) : n;
}

std::vector<std::vector<std::uint64_t>> BatchScheduler::epoch_batches(std::uint64_t epoch) const {
  const auto perm = permutation(ids_, epoch_seed(seed_, epoch));
  std::vector<std::vector<std::uint64_t>> out;
  for (std::size_t b = 0; b < batches_per_epoch(); ++b) {
    const std::size_t lo = b * batch_size_;
    const std::size_t hi = std::min(perm.size(), lo + batch_size_);
    out.emplace_back(perm.begin() + static_cast<std::ptrdiff_t>(lo),
                     perm.begin() + static_cast<std::ptrdiff_t>(hi));
  }
  return out;
}

BatchScheduler::Item BatchScheduler::next() {
  if (seq_ == 0 && current_.empty()) current_ = epoch_batches(0);
  if (pos_in_epoch_ == current_.size()) {
    ++epoch_;
    pos_in_epoch_ = 0;
    current_ = epoch_batches(epoch_);
  }
  Item item{seq_++, epoch_, epoch_seed(seed_, epoch_), std::move(current_[pos_in_epoch_++])};
  return item;
}

TargetBatch make_vertex_task(BatchScheduler::Item item) {
  TargetBatch t;
  t.kind = TaskKind::Vertex;
  t.seq_no = item.seq_no;
  t.epoch = item.epoch;
  t.epoch_seed = item.epoch_seed;
  t.seeds = std::move(item.ids);
  return t;
}

TargetBatch make_link_task(const BatchScheduler::Item& item,
                           std::span<const std::pair<VertexId, VertexId>> positives,
                           std::uint32_t num_negatives, const TypeOffsets& vertex_offsets) {
  if (num_negatives == 0) throw ArgumentError("link task needs at least one negative per positive");
  TargetBatch t;
  t.kind = TaskKind::Link;
  t.seq_no = item.seq_no;
  t.epoch = item.epoch;
  t.epoch_seed = item.epoch_seed;
  t.positives.assign(positives.begin(), positives.end());
  for (std::size_t i = 0; i < positives.size(); ++i) {
    const auto [src, dst] = positives[i];
    const TypeId dt = vertex_offsets.type_of(dst);
    StreamRng rng({item.epoch_seed, item.seq_no, 0x4E4547ULL, i});
    for (std::uint32_t k = 0; k < num_negatives; ++k) {
      t.negatives.emplace_back(src, vertex_offsets.begin(dt) + rng.uniform(vertex_offsets.count(dt)));
    }
  }
  for (const auto& [s, d] : t.positives) {
    t.seeds.push_back(s);
    t.seeds.push_back(d);
  }
  for (const auto& [s, d] : t.negatives) {
    t.seeds.push_back(s);
    t.seeds.push_back(d);
  }
  std::sort(t.seeds.begin(), t.seeds.end());
  t.seeds.erase(std::unique(t.seeds.begin(), t.seeds.end()), t.seeds.end());
  return t;
}

AdjacencyRow PartitionAdjacency::row(VertexId v) const {
  const auto local = p.to_local(v);
  if (!local || *local >= p.num_core) {
    throw OwnershipError("partition " + std::to_string(p.id) + " does not own vertex " +
                         std::to_string(v));
  }
  return {p.in_edge_ids_local(*local), p.in_sources_local(*local), p.local_to_global.data()};
}

std::vector<std::uint32_t> choose_without_replacement(std::uint32_t n, std::uint32_t fanout,
                                                      StreamRng& rng) {
  std::vector<std::uint32_t> chosen;
  chosen.reserve(fanout);
  for (std::uint32_t j = n - fanout; j < n; ++j) {
    const auto t = static_cast<std::uint32_t>(rng.uniform(j + 1ull));
    if (std::find(chosen.begin(), chosen.end(), t) == chosen.end()) {
      chosen.push_back(t);
    } else {
      chosen.push_back(j);
    }
  }
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

namespace {

template <typename Adj>
SampleResponse sample_impl(const Adj& adj, std::span<const VertexId> seeds, std::uint32_t fanout,
                           RngKey key, std::uint32_t layer) {
  SampleResponse out;
  out.counts.reserve(seeds.size());
  const TypeOffsets& eo = adj.edge_offsets();
  for (VertexId v : seeds) {
    const AdjacencyRow row = adj.row(v);
    const std::size_t before = out.edges.size();
    StreamRng rng = seed_stream(key, v, layer);
    std::size_t i = 0;
    while (i < row.edges.size()) {
      const TypeId t = eo.type_of(row.edges[i]);
      const EdgeId type_end = eo.begin(t) + eo.count(t);
      const auto it = std::lower_bound(row.edges.begin() + static_cast<std::ptrdiff_t>(i),
                                       row.edges.end(), type_end);
      const std::size_t end = static_cast<std::size_t>(it - row.edges.begin());
      const auto n = static_cast<std::uint32_t>(end - i);
      if (fanout == kFanoutFull || n <= fanout) {
        for (std::size_t k = i; k < end; ++k) out.edges.push_back({row.source(k), v, row.edges[k]});
      } else {
        for (auto k : choose_without_replacement(n, fanout, rng)) {
          out.edges.push_back({row.source(i + k), v, row.edges[i + k]});
        }
      }
      i = end;
    }
    out.counts.push_back(static_cast<std::uint32_t>(out.edges.size() - before));
  }
  return out;
}

}  // namespace

SampleResponse sample_one_hop(const GraphAdjacency& adj, std::span<const VertexId> seeds,
                              std::uint32_t fanout, RngKey key, std::uint32_t layer) {
  return sample_impl(adj, seeds, fanout, key, layer);
}

SampleResponse sample_one_hop(const PartitionAdjacency& adj, std::span<const VertexId> seeds,
                              std::uint32_t fanout, RngKey key, std::uint32_t layer) {
  return sample_impl(adj, seeds, fanout, key, layer);
}

SeedSplit split_local_remote(std::span<const VertexId> seeds, const PartitionBook& book) {
  SeedSplit s;
  s.subsets.resize(book.num_partitions());
  s.route.reserve(seeds.size());
  for (VertexId v : seeds) {
    const PartId p = book.owner(v);
    s.route.emplace_back(p, static_cast<std::uint32_t>(s.subsets[p].size()));
    s.subsets[p].push_back(v);
  }
  return s;
}

SampledBlock stitch(std::span<const VertexId> seeds, const SeedSplit& split,
                    std::span<const std::optional<SampleResponse>> results, std::uint32_t layer) {
  const std::size_t k = split.subsets.size();
  if (results.size() != k) throw IncompleteBatchError("result count does not match partition count");
  std::vector<std::vector<std::size_t>> offsets(k);
  for (std::size_t p = 0; p < k; ++p) {
    if (split.subsets[p].empty()) continue;
    if (!results[p]) {
      throw IncompleteBatchError("missing sampling result from partition " + std::to_string(p));
    }
    const auto& r = *results[p];
    if (r.counts.size() != split.subsets[p].size()) {
      throw IncompleteBatchError("partition " + std::to_string(p) + " answered for " +
                                 std::to_string(r.counts.size()) + " of " +
                                 std::to_string(split.subsets[p].size()) + " seeds");
    }
    auto& off = offsets[p];
    off.resize(r.counts.size() + 1, 0);
    for (std::size_t i = 0; i < r.counts.size(); ++i) off[i + 1] = off[i] + r.counts[i];
    if (off.back() != r.edges.size()) throw IncompleteBatchError("sampling result is truncated");
  }
  SampledBlock block;
  block.layer = layer;
  block.dsts.assign(seeds.begin(), seeds.end());
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    const auto [p, j] = split.route[i];
    const auto& edges = results[p]->edges;
    block.edges.insert(block.edges.end(), edges.begin() + static_cast<std::ptrdiff_t>(offsets[p][j]),
                       edges.begin() + static_cast<std::ptrdiff_t>(offsets[p][j + 1]));
  }
  return block;
}

std::vector<VertexId> compute_frontier(const SampledBlock& block) {
  std::vector<VertexId> f;
  f.reserve(block.dsts.size() + block.edges.size());
  f.insert(f.end(), block.dsts.begin(), block.dsts.end());
  for (const auto& e : block.edges) f.push_back(e.src);
  std::sort(f.begin(), f.end());
  f.erase(std::unique(f.begin(), f.end()), f.end());
  return f;
}

std::vector<std::vector<VertexId>> compute_frontier_bundled(std::span<const SampledBlock* const> blocks,
                                                            PriorityWorkerPool* pool) {
  std::vector<std::vector<VertexId>> out(blocks.size());
  if (pool == nullptr || blocks.size() < 2) {
    for (std::size_t i = 0; i < blocks.size(); ++i) out[i] = compute_frontier(*blocks[i]);
    return out;
  }
  std::mutex mu;
  std::condition_variable cv;
  std::size_t remaining = blocks.size();
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    pool->submit(StageJob{StageId::NeighborSample, i, [&, i] {
                            out[i] = compute_frontier(*blocks[i]);
                            std::lock_guard lk(mu);
                            if (--remaining == 0) cv.notify_all();
                          }});
  }
  std::unique_lock lk(mu);
  cv.wait(lk, [&] { return remaining == 0; });
  return out;
}

RawMiniBatch sample_minibatch(const HomogenizedGraph& g, TargetBatch target, const FanoutPlan& plan) {
  plan.validate();
  RawMiniBatch raw;
  const std::size_t layers = plan.num_layers();
  raw.blocks.resize(layers);
  GraphAdjacency adj{g};
  std::vector<VertexId> cur = target.seeds;
  for (std::size_t step = 0; step < layers; ++step) {
    const auto l = static_cast<std::uint32_t>(layers - 1 - step);
    SampleResponse resp = sample_one_hop(adj, cur, plan.fanouts[l], target.key(), l);
    SampledBlock& b = raw.blocks[l];
    b.layer = l;
    b.dsts = std::move(cur);
    b.edges = std::move(resp.edges);
    cur = compute_frontier(b);
  }
  raw.input_frontier = std::move(cur);
  raw.target = std::move(target);
  return raw;
}

CompactMiniBatch compact(const RawMiniBatch& raw, const TypeOffsets& edge_offsets) {
  const std::size_t layers = raw.blocks.size();
  if (layers == 0) throw StructuralError("mini-batch has no blocks");
  if (raw.blocks.back().dsts != raw.target.seeds) {
    throw StructuralError("outermost block destinations differ from the seeds");
  }
  for (std::size_t l = 0; l + 1 < layers; ++l) {
    if (raw.blocks[l].dsts != compute_frontier(raw.blocks[l + 1])) {
      throw StructuralError("block " + std::to_string(l) +
                            " destinations differ from the frontier of block " + std::to_string(l + 1));
    }
  }
  CompactMiniBatch out;
  out.kind = raw.target.kind;
  out.seq_no = raw.target.seq_no;
  out.epoch = raw.target.epoch;
  out.seeds = raw.target.seeds;
  out.blocks.resize(layers);

  std::vector<VertexId> dst_order = raw.target.seeds;
  for (std::size_t step = 0; step < layers; ++step) {
    const std::size_t l = layers - 1 - step;
    const SampledBlock& in = raw.blocks[l];
    CompactBlock& cb = out.blocks[l];
    std::unordered_map<VertexId, std::uint32_t> local;
    local.reserve(dst_order.size() + in.edges.size());
    cb.src_nodes = dst_order;
    cb.num_dst = static_cast<std::uint32_t>(dst_order.size());
    for (std::uint32_t i = 0; i < dst_order.size(); ++i) {
      if (!local.emplace(dst_order[i], i).second) {
        throw StructuralError("duplicate destination vertex " + std::to_string(dst_order[i]));
      }
    }
    std::vector<VertexId> extra;
    for (const auto& e : in.edges) {
      if (!local.contains(e.src)) extra.push_back(e.src);
    }
    std::sort(extra.begin(), extra.end());
    extra.erase(std::unique(extra.begin(), extra.end()), extra.end());
    for (VertexId v : extra) {
      local.emplace(v, static_cast<std::uint32_t>(cb.src_nodes.size()));
      cb.src_nodes.push_back(v);
    }
    cb.edge_src.reserve(in.edges.size());
    cb.edge_dst.reserve(in.edges.size());
    cb.edge_ids.reserve(in.edges.size());
    cb.edge_types.reserve(in.edges.size());
    for (const auto& e : in.edges) {
      const auto d = local.find(e.dst);
      if (d == local.end() || d->second >= cb.num_dst) {
        throw StructuralError("edge destination " + std::to_string(e.dst) + " is not a block destination");
      }
      cb.edge_src.push_back(local.at(e.src));
      cb.edge_dst.push_back(d->second);
      cb.edge_ids.push_back(e.edge);
      cb.edge_types.push_back(edge_offsets.type_of(e.edge));
    }
    dst_order = cb.src_nodes;
  }
  std::vector<VertexId> sorted_input = out.blocks.front().src_nodes;
  std::sort(sorted_input.begin(), sorted_input.end());
  if (sorted_input != raw.input_frontier) {
    throw StructuralError("input frontier differs from the input block's sources");
  }
  if (raw.target.kind == TaskKind::Link) {
    std::unordered_map<VertexId, std::uint32_t> row;
    for (std::uint32_t i = 0; i < out.seeds.size(); ++i) row.emplace(out.seeds[i], i);
    auto map_pairs = [&](const auto& pairs, auto& dst) {
      for (const auto& [s, d] : pairs) {
        if (!row.contains(s) || !row.contains(d)) throw StructuralError("pair endpoint is not a seed");
        dst.emplace_back(row.at(s), row.at(d));
      }
    };
    map_pairs(raw.target.positives, out.positives);
    map_pairs(raw.target.negatives, out.negatives);
  }
  return out;
}

std::vector<std::uint32_t> frontier_positions(std::span<const VertexId> sorted_frontier,
                                              std::span<const VertexId> nodes) {
  std::vector<std::uint32_t> pos(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto it = std::lower_bound(sorted_frontier.begin(), sorted_frontier.end(), nodes[i]);
    if (it == sorted_frontier.end() || *it != nodes[i]) {
      throw StructuralError("vertex " + std::to_string(nodes[i]) + " is not in the frontier");
    }
    pos[i] = static_cast<std::uint32_t>(it - sorted_frontier.begin());
  }
  return pos;
}

std::size_t unique_vertex_count(const RawMiniBatch& raw) {
  std::vector<VertexId> all;
  for (const auto& b : raw.blocks) {
    all.insert(all.end(), b.dsts.begin(), b.dsts.end());
    for (const auto& e : b.edges) all.push_back(e.src);
  }
  std::sort(all.begin(), all.end());
  return static_cast<std::size_t>(std::unique(all.begin(), all.end()) - all.begin());
}

}  // namespace hfg
