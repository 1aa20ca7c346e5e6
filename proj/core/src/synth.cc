/**
 *  Copyright (c) 2026 by Contributors
 * @file synth.cc
 * @brief Synthetic dataset generators.
 */
#include "hfg/synth.h"

#include <cmath>

#include "hfg/error.h"
#include "hfg/rng.h"

namespace hfg {
namespace {

/// Calls fn(j) for each j in [lo, hi) independently with probability p,
/// using geometric skips.
template <typename Fn>
void for_each_bernoulli(std::uint64_t lo, std::uint64_t hi, double p, StreamRng& rng, Fn&& fn) {
  if (p <= 0.0 || lo >= hi) return;
  if (p >= 1.0) {
    for (auto j = lo; j < hi; ++j) fn(j);
    return;
  }
  const double log_q = std::log1p(-p);
  std::uint64_t j = lo;
  while (true) {
    const double u = 1.0 - rng.uniform_real();  // (0, 1]
    const double skip = std::floor(std::log(u) / log_q);
    if (skip >= static_cast<double>(hi - j)) return;
    j += static_cast<std::uint64_t>(skip);
    fn(j);
    ++j;
    if (j >= hi) return;
  }
}

}  // namespace

Dataset generate_planted(const SynthSpec& spec) {
  if (spec.p_in < 0 || spec.p_in > 1 || spec.p_out < 0 || spec.p_out > 1) {
    throw ArgumentError("edge probabilities must lie in [0, 1]");
  }
  if (spec.train_frac < 0 || spec.val_frac < 0 || spec.test_frac < 0 ||
      spec.train_frac + spec.val_frac + spec.test_frac > 1.0 + 1e-12) {
    throw ArgumentError("split fractions must be non-negative and sum to at most 1");
  }
  if (spec.vertex_counts.size() != spec.vertex_types.size()) {
    throw ArgumentError("vertex_counts must match vertex_types");
  }
  if (spec.clusters == 0) throw ArgumentError("clusters must be >= 1");

  Dataset ds;
  ds.schema = HeteroSchema(spec.vertex_types, spec.edge_types);
  ds.vertex_counts = spec.vertex_counts;
  const TypeOffsets voff{std::span<const std::uint64_t>(ds.vertex_counts)};
  const std::uint32_t C = spec.clusters;

  auto block = [&](TypeId t, std::uint32_t c) {
    const std::uint64_t n = spec.vertex_counts[t];
    // Smallest i with i*C/n >= c.
    auto first = [&](std::uint64_t cc) { return (cc * n + C - 1) / C; };
    return std::pair<std::uint64_t, std::uint64_t>{first(c), first(c + 1)};
  };

  std::vector<TypedEdgeList> edges(spec.edge_types.size());
  for (TypeId e = 0; e < spec.edge_types.size(); ++e) {
    const TypeId st = ds.schema.edge_src_type(e);
    const TypeId dt = ds.schema.edge_dst_type(e);
    StreamRng rng{spec.seed, 0xED6E, e};
    const std::uint64_t ns = spec.vertex_counts[st];
    for (std::uint64_t s = 0; s < ns; ++s) {
      const std::uint32_t cs = planted_cluster(s, ns, C);
      for (std::uint32_t c = 0; c < C; ++c) {
        auto [lo, hi] = block(dt, c);
        if (st == dt) lo = std::max(lo, s + 1);
        const double p = (c == cs) ? spec.p_in : spec.p_out;
        for_each_bernoulli(lo, hi, p, rng, [&](std::uint64_t d) {
          if (st != dt) {
            edges[e].emplace_back(s, d);
          } else if (spec.bidirectional) {
            edges[e].emplace_back(s, d);
            edges[e].emplace_back(d, s);
          } else if (rng.next() & 1) {
            edges[e].emplace_back(s, d);
          } else {
            edges[e].emplace_back(d, s);
          }
        });
      }
    }
  }

  std::vector<std::uint8_t> masks(voff.total(), 0);
  {
    StreamRng rng{spec.seed, 0x3A5C};
    for (std::uint64_t i = 0; i < spec.vertex_counts.front(); ++i) {
      const double u = rng.uniform_real();
      std::uint8_t m = 0;
      if (u < spec.train_frac) {
        m = 1;
      } else if (u < spec.train_frac + spec.val_frac) {
        m = 2;
      } else if (u < spec.train_frac + spec.val_frac + spec.test_frac) {
        m = 3;
      }
      masks[i] = m;
    }
  }

  ds.labels.resize(voff.total());
  ds.num_classes = C;
  ds.vertex_features.resize(spec.vertex_types.size());
  for (TypeId t = 0; t < spec.vertex_types.size(); ++t) {
    const std::uint64_t n = spec.vertex_counts[t];
    for (std::uint64_t i = 0; i < n; ++i) {
      ds.labels[voff.begin(t) + i] = static_cast<std::int32_t>(planted_cluster(i, n, C));
    }
    if (spec.feat_dim == 0) continue;
    FeatureMatrix fm(spec.vertex_types[t], static_cast<std::uint32_t>(n), spec.feat_dim);
    StreamRng rng{spec.seed, 0xFEA7, t};
    for (std::uint64_t i = 0; i < n; ++i) {
      auto row = fm.row(i);
      for (auto& x : row) x = static_cast<float>(spec.feature_noise * (2.0 * rng.uniform_real() - 1.0));
      row[planted_cluster(i, n, C) % spec.feat_dim] += static_cast<float>(spec.feature_signal);
    }
    ds.vertex_features[t] = std::move(fm);
  }
  ds.edge_features.resize(spec.edge_types.size());
  ds.graph = homogenize(ds.schema, ds.vertex_counts, edges, std::move(masks));
  return ds;
}

Dataset generate_two_cliques(std::uint32_t clique_size) {
  if (clique_size < 2) throw ArgumentError("clique size must be >= 2");
  Dataset ds;
  ds.schema = HeteroSchema({"node"}, {{"node", "link", "node"}});
  ds.vertex_counts = {2ull * clique_size};
  std::vector<TypedEdgeList> edges(1);
  for (std::uint64_t base : {std::uint64_t{0}, std::uint64_t{clique_size}}) {
    for (std::uint64_t i = 0; i < clique_size; ++i) {
      for (std::uint64_t j = i + 1; j < clique_size; ++j) edges[0].emplace_back(base + i, base + j);
    }
  }
  edges[0].emplace_back(clique_size - 1, clique_size);
  ds.vertex_features.resize(1);
  ds.edge_features.resize(1);
  ds.graph = homogenize(ds.schema, ds.vertex_counts, edges);
  return ds;
}

SynthSpec hetero_spec(std::uint64_t users, std::uint64_t items, std::uint64_t categories,
                      std::uint32_t clusters, std::uint32_t feat_dim, std::uint64_t seed) {
  SynthSpec s;
  s.vertex_types = {"user", "item", "category"};
  s.vertex_counts = {users, items, categories};
  s.edge_types = {{"user", "follows", "user"},
                  {"user", "clicks", "item"},
                  {"item", "clicked_by", "user"},
                  {"item", "in_category", "category"}};
  s.clusters = clusters;
  s.p_in = 0.05;
  s.p_out = 0.002;
  s.bidirectional = true;
  s.feat_dim = feat_dim;
  s.seed = seed;
  return s;
}

}  // namespace hfg
