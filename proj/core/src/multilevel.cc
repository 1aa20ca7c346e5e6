/**
 *  Copyright (c) 2026 by Contributors
 * @file multilevel.cc
 * @brief Multilevel multi-constraint k-way partitioner.
 */
#include "hfg/multilevel.h"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <queue>

#include "hfg/error.h"
#include "hfg/rng.h"

namespace hfg {

WeightedGraph build_weighted_graph(std::uint32_t n,
                                   std::span<const std::pair<std::uint32_t, std::uint32_t>> edges,
                                   std::size_t ncon, std::vector<std::int64_t> vwgt) {
  if (vwgt.size() != static_cast<std::size_t>(n) * ncon) {
    throw StructuralError("vertex weight array must hold n * ncon entries");
  }
  std::vector<std::pair<std::uint32_t, std::uint32_t>> arcs;
  arcs.reserve(edges.size() * 2);
  for (auto [u, v] : edges) {
    if (u >= n || v >= n) throw RangeError("edge endpoint out of range");
    if (u == v) continue;
    arcs.emplace_back(u, v);
    arcs.emplace_back(v, u);
  }
  std::sort(arcs.begin(), arcs.end());
  WeightedGraph g;
  g.ncon = ncon;
  g.vwgt = std::move(vwgt);
  g.xadj.assign(n + 1, 0);
  for (std::size_t i = 0; i < arcs.size();) {
    std::size_t j = i;
    while (j < arcs.size() && arcs[j] == arcs[i]) ++j;
    g.adjncy.push_back(arcs[i].second);
    g.adjwgt.push_back(static_cast<std::int64_t>(j - i));
    ++g.xadj[arcs[i].first + 1];
    i = j;
  }
  std::partial_sum(g.xadj.begin(), g.xadj.end(), g.xadj.begin());
  return g;
}

std::int64_t weighted_cut(const WeightedGraph& g, std::span<const PartId> part) {
  std::int64_t cut = 0;
  for (std::uint32_t v = 0; v < g.num_vertices(); ++v) {
    for (auto i = g.xadj[v]; i < g.xadj[v + 1]; ++i) {
      if (part[v] != part[g.adjncy[i]]) cut += g.adjwgt[i];
    }
  }
  return cut / 2;
}

std::vector<std::int64_t> part_weights(const WeightedGraph& g, std::span<const PartId> part,
                                       std::uint32_t k) {
  std::vector<std::int64_t> sums(static_cast<std::size_t>(k) * g.ncon, 0);
  for (std::uint32_t v = 0; v < g.num_vertices(); ++v) {
    for (std::size_t c = 0; c < g.ncon; ++c) sums[part[v] * g.ncon + c] += g.vwgt[v * g.ncon + c];
  }
  return sums;
}

bool within_balance(std::span<const std::int64_t> part_sums, std::span<const std::int64_t> totals,
                    std::uint32_t k, double eps) {
  const std::size_t ncon = totals.size();
  for (std::uint32_t p = 0; p < k; ++p) {
    for (std::size_t c = 0; c < ncon; ++c) {
      const double bound = (1.0 + eps) * static_cast<double>(totals[c]) / k;
      if (static_cast<double>(part_sums[p * ncon + c]) > bound + 1e-9) return false;
    }
  }
  return true;
}

Contraction coarsen_once(const WeightedGraph& g, std::span<const std::int64_t> max_vwgt,
                         std::uint64_t seed) {
  const std::uint32_t n = g.num_vertices();
  const std::size_t ncon = g.ncon;
  constexpr std::uint32_t kUnmatched = std::numeric_limits<std::uint32_t>::max();
  std::vector<std::uint32_t> match(n, kUnmatched);

  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  StreamRng rng{seed, 0xC0A5};
  for (std::uint32_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.uniform(i)]);

  auto fits = [&](std::uint32_t a, std::uint32_t b) {
    for (std::size_t c = 0; c < ncon; ++c) {
      if (g.vwgt[a * ncon + c] + g.vwgt[b * ncon + c] > max_vwgt[c]) return false;
    }
    return true;
  };

  for (std::uint32_t v : order) {
    if (match[v] != kUnmatched) continue;
    std::uint32_t best = kUnmatched;
    std::int64_t best_w = -1;
    for (auto i = g.xadj[v]; i < g.xadj[v + 1]; ++i) {
      const std::uint32_t u = g.adjncy[i];
      if (match[u] != kUnmatched || !fits(v, u)) continue;
      if (g.adjwgt[i] > best_w || (g.adjwgt[i] == best_w && u < best)) {
        best = u;
        best_w = g.adjwgt[i];
      }
    }
    if (best == kUnmatched) {
      match[v] = v;
    } else {
      match[v] = best;
      match[best] = v;
    }
  }
  // Isolated vertices never find a neighbor; pair them with each other so
  // graphs with many of them still shrink.
  std::uint32_t pending = kUnmatched;
  for (std::uint32_t v : order) {
    if (match[v] != v || g.xadj[v] != g.xadj[v + 1]) continue;
    if (pending == kUnmatched) {
      pending = v;
    } else if (fits(pending, v)) {
      match[pending] = v;
      match[v] = pending;
      pending = kUnmatched;
    }
  }

  Contraction out;
  out.cmap.assign(n, kUnmatched);
  std::uint32_t nc = 0;
  for (std::uint32_t v = 0; v < n; ++v) {
    if (out.cmap[v] != kUnmatched) continue;
    out.cmap[v] = nc;
    out.cmap[match[v]] = nc;
    ++nc;
  }

  WeightedGraph& cg = out.coarse;
  cg.ncon = ncon;
  cg.vwgt.assign(static_cast<std::size_t>(nc) * ncon, 0);
  for (std::uint32_t v = 0; v < n; ++v) {
    for (std::size_t c = 0; c < ncon; ++c) cg.vwgt[out.cmap[v] * ncon + c] += g.vwgt[v * ncon + c];
  }

  // Members of each coarse vertex, then merge their adjacency.
  std::vector<std::uint32_t> first(nc, kUnmatched), second(nc, kUnmatched);
  for (std::uint32_t v = 0; v < n; ++v) {
    auto cv = out.cmap[v];
    (first[cv] == kUnmatched ? first[cv] : second[cv]) = v;
  }
  std::vector<std::int64_t> acc(nc, 0);
  std::vector<std::uint32_t> touched;
  cg.xadj.assign(nc + 1, 0);
  for (std::uint32_t cv = 0; cv < nc; ++cv) {
    touched.clear();
    for (std::uint32_t member : {first[cv], second[cv]}) {
      if (member == kUnmatched) continue;
      for (auto i = g.xadj[member]; i < g.xadj[member + 1]; ++i) {
        const std::uint32_t cu = out.cmap[g.adjncy[i]];
        if (cu == cv) continue;
        if (acc[cu] == 0) touched.push_back(cu);
        acc[cu] += g.adjwgt[i];
      }
    }
    std::sort(touched.begin(), touched.end());
    for (auto cu : touched) {
      cg.adjncy.push_back(cu);
      cg.adjwgt.push_back(acc[cu]);
      acc[cu] = 0;
    }
    cg.xadj[cv + 1] = cg.adjncy.size();
  }
  return out;
}

namespace {

struct Balance {
  std::uint32_t k = 1;
  std::size_t ncon = 0;
  std::vector<double> bound;
  std::vector<double> unit;
};

Balance make_balance(std::span<const std::int64_t> totals, std::uint32_t k, double eps) {
  Balance b;
  b.k = k;
  b.ncon = totals.size();
  for (auto t : totals) {
    const double mean = static_cast<double>(t) / k;
    b.bound.push_back((1.0 + eps) * mean);
    b.unit.push_back(mean > 0 ? mean : 1.0);
  }
  return b;
}

constexpr double kTol = 1e-9;

class Refiner {
 public:
  Refiner(const WeightedGraph& g, const Balance& bal, std::vector<PartId>& part)
      : g_(g), bal_(bal), part_(part), scratch_(bal.k, 0) {
    loads_ = part_weights(g_, part_, bal_.k);
  }

  double part_violation(PartId p) const {
    double v = 0;
    for (std::size_t c = 0; c < bal_.ncon; ++c) {
      const double over = static_cast<double>(loads_[p * bal_.ncon + c]) - bal_.bound[c];
      if (over > kTol) v += over / bal_.unit[c];
    }
    return v;
  }

  double violation() const {
    double v = 0;
    for (PartId p = 0; p < bal_.k; ++p) v += part_violation(p);
    return v;
  }

  bool fits(std::uint32_t v, PartId q) const {
    for (std::size_t c = 0; c < bal_.ncon; ++c) {
      const double after = static_cast<double>(loads_[q * bal_.ncon + c] + g_.vwgt[v * bal_.ncon + c]);
      if (g_.vwgt[v * bal_.ncon + c] > 0 && after > bal_.bound[c] + kTol) return false;
    }
    return true;
  }

  /// Violation change of parts a and q if v moved from a to q.
  double move_delta(std::uint32_t v, PartId a, PartId q) {
    const double before = part_violation(a) + part_violation(q);
    apply_loads(v, a, q);
    const double after = part_violation(a) + part_violation(q);
    apply_loads(v, q, a);
    return after - before;
  }

  void move(std::uint32_t v, PartId to) {
    apply_loads(v, part_[v], to);
    part_[v] = to;
  }

  /// Fills scratch_ with connectivity of v to each part; returns touched parts.
  const std::vector<PartId>& connectivity(std::uint32_t v) {
    for (auto p : touched_) scratch_[p] = 0;
    touched_.clear();
    for (auto i = g_.xadj[v]; i < g_.xadj[v + 1]; ++i) {
      const PartId p = part_[g_.adjncy[i]];
      if (scratch_[p] == 0) touched_.push_back(p);
      scratch_[p] += g_.adjwgt[i];
    }
    return touched_;
  }
  std::int64_t conn(PartId p) const { return scratch_[p]; }

  void rebalance() {
    const std::uint32_t n = g_.num_vertices();
    for (int round = 0; round < 64; ++round) {
      if (violation() <= kTol) return;
      struct Cand {
        std::int64_t gain;
        std::uint32_t v;
        PartId to;
      };
      std::vector<Cand> cands;
      for (std::uint32_t v = 0; v < n; ++v) {
        const PartId a = part_[v];
        if (part_violation(a) <= kTol) continue;
        connectivity(v);
        const std::int64_t own = conn(a);
        bool have = false;
        Cand best{0, v, a};
        for (PartId q = 0; q < bal_.k; ++q) {
          if (q == a) continue;
          if (move_delta(v, a, q) >= -kTol) continue;
          const std::int64_t gain = conn(q) - own;
          if (!have || gain > best.gain) {
            best = {gain, v, q};
            have = true;
          }
        }
        if (have) cands.push_back(best);
      }
      if (cands.empty()) return;
      std::stable_sort(cands.begin(), cands.end(),
                       [](const Cand& x, const Cand& y) { return x.gain > y.gain; });
      bool moved = false;
      for (const auto& c : cands) {
        const PartId a = part_[c.v];
        if (part_violation(a) <= kTol) continue;
        if (move_delta(c.v, a, c.to) >= -kTol) continue;
        move(c.v, c.to);
        moved = true;
      }
      if (!moved) return;
    }
  }

  /// One FM pass with rollback to the best prefix. Returns true if the
  /// (violation, cut) pair improved.
  bool fm_pass(StreamRng& rng) {
    const std::uint32_t n = g_.num_vertices();
    struct Entry {
      std::int64_t gain;
      std::uint64_t tie;
      std::uint32_t v;
      PartId to;
      std::uint32_t version;
      bool operator<(const Entry& o) const {
        if (gain != o.gain) return gain < o.gain;
        return tie < o.tie;
      }
    };
    std::priority_queue<Entry> heap;
    std::vector<std::uint32_t> version(n, 0);
    std::vector<char> locked(n, 0);

    auto push = [&](std::uint32_t v) {
      const PartId a = part_[v];
      const auto& parts = connectivity(v);
      const std::int64_t own = conn(a);
      bool have = false;
      Entry best{};
      for (PartId q : parts) {
        if (q == a || !fits(v, q)) continue;
        const std::int64_t gain = conn(q) - own;
        if (!have || gain > best.gain || (gain == best.gain && q < best.to)) {
          best = {gain, 0, v, q, version[v]};
          have = true;
        }
      }
      if (have) {
        best.tie = rng.next();
        heap.push(best);
      }
    };
    for (std::uint32_t v = 0; v < n; ++v) push(v);

    struct Move {
      std::uint32_t v;
      PartId from;
    };
    std::vector<Move> moves;
    std::int64_t cut = weighted_cut(g_, part_);
    const std::int64_t start_cut = cut;
    const double start_viol = violation();
    std::int64_t best_cut = cut;
    double best_viol = start_viol;
    std::size_t best_len = 0;
    std::size_t since_best = 0;
    const std::size_t limit = std::min<std::size_t>(n, std::max<std::size_t>(50, n / 20));

    while (!heap.empty()) {
      Entry e = heap.top();
      heap.pop();
      if (locked[e.v] || e.version != version[e.v]) continue;
      if (!fits(e.v, e.to)) {
        ++version[e.v];
        push(e.v);
        continue;
      }
      const PartId from = part_[e.v];
      move(e.v, e.to);
      locked[e.v] = 1;
      cut -= e.gain;
      moves.push_back({e.v, from});
      const double viol = violation();
      if (viol < best_viol - kTol || (viol <= best_viol + kTol && cut < best_cut)) {
        best_viol = viol;
        best_cut = cut;
        best_len = moves.size();
        since_best = 0;
      } else if (++since_best > limit) {
        break;
      }
      for (auto i = g_.xadj[e.v]; i < g_.xadj[e.v + 1]; ++i) {
        const std::uint32_t u = g_.adjncy[i];
        if (locked[u]) continue;
        ++version[u];
        push(u);
      }
    }
    while (moves.size() > best_len) {
      move(moves.back().v, moves.back().from);
      moves.pop_back();
    }
    return best_viol < start_viol - kTol || best_cut < start_cut;
  }

  void refine(StreamRng& rng, int max_passes = 8) {
    rebalance();
    for (int pass = 0; pass < max_passes; ++pass) {
      if (!fm_pass(rng)) break;
    }
    rebalance();
  }

 private:
  void apply_loads(std::uint32_t v, PartId from, PartId to) {
    for (std::size_t c = 0; c < bal_.ncon; ++c) {
      const auto w = g_.vwgt[v * bal_.ncon + c];
      loads_[from * bal_.ncon + c] -= w;
      loads_[to * bal_.ncon + c] += w;
    }
  }

  const WeightedGraph& g_;
  const Balance& bal_;
  std::vector<PartId>& part_;
  std::vector<std::int64_t> loads_;
  std::vector<std::int64_t> scratch_;
  std::vector<PartId> touched_;
};

std::vector<PartId> grow_regions(const WeightedGraph& g, const Balance& bal, StreamRng& rng) {
  const std::uint32_t n = g.num_vertices();
  const std::uint32_t k = bal.k;
  constexpr PartId kNone = std::numeric_limits<PartId>::max();
  std::vector<PartId> part(n, kNone);
  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  for (std::uint32_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.uniform(i)]);

  // Seeds: a random start, then repeatedly the vertex farthest (BFS hops)
  // from all chosen seeds; unreachable vertices count as farthest.
  std::vector<std::uint32_t> seeds{order[0]};
  while (seeds.size() < k) {
    std::vector<std::uint32_t> dist(n, std::numeric_limits<std::uint32_t>::max());
    std::deque<std::uint32_t> q;
    for (auto s : seeds) {
      dist[s] = 0;
      q.push_back(s);
    }
    while (!q.empty()) {
      auto v = q.front();
      q.pop_front();
      for (auto i = g.xadj[v]; i < g.xadj[v + 1]; ++i) {
        auto u = g.adjncy[i];
        if (dist[u] == std::numeric_limits<std::uint32_t>::max()) {
          dist[u] = dist[v] + 1;
          q.push_back(u);
        }
      }
    }
    std::uint32_t pick = order[0];
    std::uint32_t best = 0;
    bool found = false;
    for (auto v : order) {
      if (std::find(seeds.begin(), seeds.end(), v) != seeds.end()) continue;
      if (!found || dist[v] > best) {
        pick = v;
        best = dist[v];
        found = true;
      }
    }
    seeds.push_back(pick);
  }

  std::vector<std::int64_t> loads(static_cast<std::size_t>(k) * bal.ncon, 0);
  std::vector<std::int64_t> conn(static_cast<std::size_t>(k) * n, 0);
  auto assign = [&](std::uint32_t v, PartId p) {
    part[v] = p;
    for (std::size_t c = 0; c < bal.ncon; ++c) loads[p * bal.ncon + c] += g.vwgt[v * bal.ncon + c];
    for (auto i = g.xadj[v]; i < g.xadj[v + 1]; ++i) conn[p * n + g.adjncy[i]] += g.adjwgt[i];
  };
  for (PartId p = 0; p < k; ++p) assign(seeds[p], p);

  auto load_level = [&](PartId p) {
    double m = 0;
    for (std::size_t c = 0; c < bal.ncon; ++c) {
      m = std::max(m, static_cast<double>(loads[p * bal.ncon + c]) / bal.unit[c]);
    }
    return m;
  };

  std::uint32_t remaining = n - k;
  std::size_t cursor = 0;
  while (remaining > 0) {
    PartId p = 0;
    for (PartId q = 1; q < k; ++q) {
      if (load_level(q) < load_level(p)) p = q;
    }
    std::uint32_t pick = std::numeric_limits<std::uint32_t>::max();
    std::int64_t best = 0;
    for (std::uint32_t v = 0; v < n; ++v) {
      if (part[v] != kNone) continue;
      if (conn[p * n + v] > best) {
        best = conn[p * n + v];
        pick = v;
      }
    }
    if (pick == std::numeric_limits<std::uint32_t>::max()) {
      while (part[order[cursor]] != kNone) ++cursor;
      pick = order[cursor];
    }
    assign(pick, p);
    --remaining;
  }
  return part;
}

struct Score {
  double violation;
  std::int64_t cut;
  bool operator<(const Score& o) const {
    if (std::abs(violation - o.violation) > kTol) return violation < o.violation;
    return cut < o.cut;
  }
};

std::vector<PartId> run_once(const WeightedGraph& g, std::uint32_t k,
                             std::span<const std::int64_t> totals, double eps, std::uint64_t seed,
                             std::size_t* levels_out) {
  const Balance bal = make_balance(totals, k, eps);
  const std::uint32_t coarsen_to = std::max<std::uint32_t>(20 * k, 80);

  std::vector<std::int64_t> max_vwgt(g.ncon, 0);
  for (std::uint32_t v = 0; v < g.num_vertices(); ++v) {
    for (std::size_t c = 0; c < g.ncon; ++c) {
      max_vwgt[c] = std::max(max_vwgt[c], g.vwgt[v * g.ncon + c]);
    }
  }
  for (std::size_t c = 0; c < g.ncon; ++c) {
    const auto cap = static_cast<std::int64_t>(std::ceil(1.5 * static_cast<double>(totals[c]) / coarsen_to));
    max_vwgt[c] = std::max(max_vwgt[c], cap);
  }

  std::vector<WeightedGraph> graphs;
  std::vector<std::vector<std::uint32_t>> cmaps;
  const WeightedGraph* cur = &g;
  std::uint64_t level = 0;
  while (cur->num_vertices() > coarsen_to) {
    Contraction c = coarsen_once(*cur, max_vwgt, mix64(seed ^ (level + 1)));
    if (c.coarse.num_vertices() > 0.95 * cur->num_vertices()) break;
    cmaps.push_back(std::move(c.cmap));
    graphs.push_back(std::move(c.coarse));
    cur = &graphs.back();
    ++level;
  }
  if (levels_out) *levels_out = graphs.size();

  StreamRng rng{seed, 0x1417};
  std::vector<PartId> best_part;
  Score best_score{std::numeric_limits<double>::infinity(), 0};
  for (int attempt = 0; attempt < 8; ++attempt) {
    std::vector<PartId> part = grow_regions(*cur, bal, rng);
    Refiner r(*cur, bal, part);
    r.refine(rng);
    Score s{r.violation(), weighted_cut(*cur, part)};
    if (best_part.empty() || s < best_score) {
      best_score = s;
      best_part = std::move(part);
    }
  }

  std::vector<PartId> part = std::move(best_part);
  for (std::size_t lvl = graphs.size(); lvl-- > 0;) {
    const WeightedGraph& fine = lvl == 0 ? g : graphs[lvl - 1];
    std::vector<PartId> fine_part(fine.num_vertices());
    for (std::uint32_t v = 0; v < fine.num_vertices(); ++v) fine_part[v] = part[cmaps[lvl][v]];
    part = std::move(fine_part);
    Refiner r(fine, bal, part);
    r.refine(rng);
  }
  return part;
}

}  // namespace

MultilevelResult multilevel_partition(const WeightedGraph& g, std::uint32_t k, double eps,
                                      std::uint64_t seed) {
  const std::uint32_t n = g.num_vertices();
  if (k == 0) throw ArgumentError("k must be >= 1");
  if (k > n) {
    throw ArgumentError("k = " + std::to_string(k) + " exceeds vertex count " + std::to_string(n));
  }
  if (!(eps > 0)) throw ArgumentError("eps must be > 0");

  MultilevelResult res;
  std::vector<std::int64_t> totals(g.ncon, 0);
  for (std::uint32_t v = 0; v < n; ++v) {
    for (std::size_t c = 0; c < g.ncon; ++c) totals[c] += g.vwgt[v * g.ncon + c];
  }
  if (k == 1) {
    res.part.assign(n, 0);
    res.eps_used = eps;
    res.balanced = true;
    return res;
  }

  double cur_eps = eps;
  while (true) {
    res.part = run_once(g, k, totals, cur_eps, seed, &res.levels);
    res.eps_used = cur_eps;
    res.balanced = within_balance(part_weights(g, res.part, k), totals, k, cur_eps);
    if (res.balanced || cur_eps >= 1.0) break;
    cur_eps = std::min(1.0, cur_eps * 2.0);
    res.relaxed = true;
  }
  res.cut = weighted_cut(g, res.part);
  return res;
}

}  // namespace hfg
