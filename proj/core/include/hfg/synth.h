/**
 *  Copyright (c) 2026 by Contributors
 * @file hfg/synth.h
 * @brief Reproducible synthetic datasets: planted-partition graphs (homo- or
 *        heterogeneous) and the two-clique bridge graph.
 */
#ifndef HFG_SYNTH_H_
#define HFG_SYNTH_H_

#include <cstdint>
#include <string>
#include <vector>

#include "hfg/graph_io.h"

namespace hfg {

struct SynthSpec {
  std::vector<std::string> vertex_types{"node"};
  std::vector<std::uint64_t> vertex_counts{400};
  std::vector<EdgeType> edge_types{{"node", "link", "node"}};
  /// Vertices of every type are split into this many contiguous communities;
  /// community c of one type is "planted" with community c of the others.
  std::uint32_t clusters = 2;
  double p_in = 0.2;
  double p_out = 0.01;
  /// Same-type relations sample unordered pairs; when set both directions
  /// are stored, otherwise one with a random orientation.
  bool bidirectional = false;
  std::uint32_t feat_dim = 0;
  double feature_signal = 1.0;
  double feature_noise = 0.5;
  /// Split fractions applied to vertices of the first type only.
  double train_frac = 0.6;
  double val_frac = 0.2;
  double test_frac = 0.2;
  std::uint64_t seed = 1;
};

/// Throws ArgumentError for probabilities outside [0, 1] or fractions whose
/// sum exceeds 1.
Dataset generate_planted(const SynthSpec& spec);

/// Two cliques of `clique_size` vertices, each undirected pair stored once,
/// joined by a single bridge edge (clique_size-1 -> clique_size).
Dataset generate_two_cliques(std::uint32_t clique_size = 8);

/// Heterogeneous schema with three vertex types and four relations
/// (user-follows-user, user-clicks-item, item-clicked_by-user,
/// item-in_category-category), with planted communities.
SynthSpec hetero_spec(std::uint64_t users, std::uint64_t items, std::uint64_t categories,
                      std::uint32_t clusters, std::uint32_t feat_dim, std::uint64_t seed);

/// Community index of typed vertex i of a type with `count` vertices.
inline std::uint32_t planted_cluster(std::uint64_t i, std::uint64_t count, std::uint32_t clusters) {
  return static_cast<std::uint32_t>(i * clusters / count);
}

}  // namespace hfg

#endif  // HFG_SYNTH_H_
