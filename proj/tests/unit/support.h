// Shared fixtures and independent oracles for the test suites.
#ifndef HFG_TESTS_SUPPORT_H_
#define HFG_TESTS_SUPPORT_H_

#include <Eigen/Dense>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "hfg/graph_io.h"
#include "hfg/model.h"
#include "hfg/partition.h"
#include "hfg/pipeline.h"
#include "hfg/synth.h"

namespace hfg::testing {

/// Two vertex types, three relations, planted communities.
inline SynthSpec two_type_spec(std::uint64_t papers, std::uint64_t authors, std::uint32_t feat_dim,
                               std::uint64_t seed) {
  SynthSpec s;
  s.vertex_types = {"paper", "author"};
  s.vertex_counts = {papers, authors};
  s.edge_types = {{"paper", "cites", "paper"}, {"author", "writes", "paper"}, {"paper", "written_by", "author"}};
  s.clusters = 4;
  s.p_in = 0.06;
  s.p_out = 0.004;
  s.feat_dim = feat_dim;
  s.train_frac = 0.8;
  s.val_frac = 0.1;
  s.test_frac = 0.1;
  s.seed = seed;
  return s;
}

/// Full-graph message passing straight from the edge list: every vertex,
/// every layer, mean per relation over all in-edges (duplicates counted).
inline MatrixT<double> dense_forward(const Dataset& data, const SageModel<double>& model) {
  const auto& g = data.graph;
  const auto n = static_cast<Eigen::Index>(g.num_vertices());
  const auto& vo = g.vertex_offsets();
  const Eigen::Index d0 = model.layers.front().d_in();
  MatrixT<double> h(n, d0);
  for (Eigen::Index v = 0; v < n; ++v) {
    const auto typed = vo.to_typed(static_cast<VertexId>(v));
    const auto row = data.vertex_features[typed.type]->row(typed.id);
    for (Eigen::Index j = 0; j < d0; ++j) h(v, j) = row[j];
  }
  const auto ends = g.edge_endpoints();
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    const auto& layer = model.layers[l];
    std::map<std::pair<VertexId, TypeId>, std::vector<VertexId>> nbrs;
    for (EdgeId e = 0; e < ends.size(); ++e) nbrs[{ends[e].second, g.edge_type(e)}].push_back(ends[e].first);
    MatrixT<double> agg = MatrixT<double>::Zero(n, h.cols());
    for (const auto& [key, srcs] : nbrs) {
      RowVectorT<double> mean = RowVectorT<double>::Zero(h.cols());
      for (VertexId u : srcs) mean += h.row(static_cast<Eigen::Index>(u));
      agg.row(static_cast<Eigen::Index>(key.first)) += mean / static_cast<double>(srcs.size());
    }
    MatrixT<double> z = h * layer.w_self + agg * layer.w_neigh;
    z.rowwise() += layer.bias;
    h = l + 1 == model.layers.size() ? z : MatrixT<double>(z.cwiseMax(0.0));
  }
  return h;
}

/// Single-machine sample, gather and compaction without a pipeline.
inline MiniBatch local_minibatch(const Dataset& d, const TargetBatch& target, const FanoutPlan& plan) {
  const RawMiniBatch raw = sample_minibatch(d.graph, target, plan);
  const std::uint32_t dim = d.vertex_features[0]->row_width;
  std::vector<float> rows(raw.input_frontier.size() * dim);
  std::exception_ptr err;
  dataset_features(d)(raw.input_frontier, rows.data(), [&](std::exception_ptr e) { err = e; });
  if (err) std::rethrow_exception(err);
  return stage_on_device(raw, rows, dim, d.graph.edge_offsets());
}

inline std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() /
           ("hfg_test_" + name + "_" + std::to_string(std::random_device{}()));
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace hfg::testing

#endif  // HFG_TESTS_SUPPORT_H_
