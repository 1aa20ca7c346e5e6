/**
 *  Copyright (c) 2026 by Contributors
 * @file hfg/model.h
 * @brief GraphSage with a mean aggregator and hand-written backprop.
 *
 * Layer l maps the sources of block l to its destinations:
 *
 *   z_v = h_v W_self + (sum over edge types t of mean_{u in N_t(v)} h_u) W_neigh + b
 *
 * followed by ReLU on every layer except the last. A destination with no
 * sampled neighbors of type t contributes nothing for t.
 */
#ifndef HFG_MODEL_H_
#define HFG_MODEL_H_

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include "hfg/sampler.h"

namespace hfg {

template <typename S>
using MatrixT = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename S>
using RowVectorT = Eigen::Matrix<S, 1, Eigen::Dynamic>;

template <typename S>
struct SageLayer {
  MatrixT<S> w_self;
  MatrixT<S> w_neigh;
  RowVectorT<S> bias;

  Eigen::Index d_in() const { return w_self.rows(); }
  Eigen::Index d_out() const { return w_self.cols(); }
};

template <typename S>
struct SageModel {
  std::vector<SageLayer<S>> layers;

  /// dims = {d_in, hidden..., d_out}; one layer per consecutive pair.
  static SageModel zeros(std::span<const std::uint32_t> dims);
  /// Seeded uniform(-1/sqrt(d_in), 1/sqrt(d_in)) for weights and biases.
  static SageModel init(std::span<const std::uint32_t> dims, std::uint64_t seed);

  std::vector<std::uint32_t> dims() const;
  std::size_t num_params() const;
  /// Per layer: W_self, W_neigh, bias, each row-major.
  std::vector<S> flatten() const;
  void unflatten(std::span<const S> values);
  /// Throws StructuralError on broken shapes or non-finite entries.
  void validate() const;

  template <typename T>
  SageModel<T> cast() const {
    SageModel<T> out;
    for (const auto& l : layers) {
      out.layers.push_back({l.w_self.template cast<T>(), l.w_neigh.template cast<T>(),
                            l.bias.template cast<T>()});
    }
    return out;
  }

  bool operator==(const SageModel& o) const;
};

template <typename S>
using GradientSet = SageModel<S>;

template <typename S>
struct ForwardCache {
  /// inputs[l] is the source matrix of layer l; inputs[L] is the output.
  std::vector<MatrixT<S>> inputs;
  std::vector<MatrixT<S>> agg;
  std::vector<MatrixT<S>> pre;
};

/// Returns one row per outermost destination (the seeds).
template <typename S>
MatrixT<S> forward(const CompactMiniBatch& batch, const MatrixT<S>& feats, const SageModel<S>& model,
                   ForwardCache<S>* cache = nullptr);

template <typename S>
GradientSet<S> backward(const CompactMiniBatch& batch, const SageModel<S>& model,
                        const ForwardCache<S>& cache, const MatrixT<S>& out_grad);

template <typename S>
struct LossResult {
  S loss = 0;
  MatrixT<S> grad;
};

/// Mean softmax cross-entropy over rows.
template <typename S>
LossResult<S> softmax_cross_entropy(const MatrixT<S>& logits, std::span<const std::int32_t> labels);

/// Mean binary logistic loss over dot-product scores of positive (label 1)
/// and negative (label 0) pairs of output rows.
template <typename S>
LossResult<S> link_logistic(const MatrixT<S>& emb,
                            std::span<const std::pair<std::uint32_t, std::uint32_t>> positives,
                            std::span<const std::pair<std::uint32_t, std::uint32_t>> negatives);

template <typename S>
double accuracy(const MatrixT<S>& logits, std::span<const std::int32_t> labels);

/// Fraction of positives scored strictly above each of their paired
/// negatives; negatives[i * n + j] pairs with positives[i].
template <typename S>
double link_hit_rate(const MatrixT<S>& emb,
                     std::span<const std::pair<std::uint32_t, std::uint32_t>> positives,
                     std::span<const std::pair<std::uint32_t, std::uint32_t>> negatives);

/// model -= lr * grads, with grads flattened like SageModel::flatten.
template <typename S>
void sgd_apply(SageModel<S>& model, std::span<const S> grads, S lr);

/// "HFC1", u32 layers, then per layer u32 d_in, u32 d_out, W_self, W_neigh, bias.
void save_checkpoint(const std::filesystem::path& path, const SageModel<float>& model);
SageModel<float> load_checkpoint(const std::filesystem::path& path);

#define HFG_MODEL_EXTERN(S)                                                                         \
  extern template struct SageModel<S>;                                                             \
  extern template MatrixT<S> forward(const CompactMiniBatch&, const MatrixT<S>&, const SageModel<S>&, \
                                     ForwardCache<S>*);                                            \
  extern template GradientSet<S> backward(const CompactMiniBatch&, const SageModel<S>&,             \
                                          const ForwardCache<S>&, const MatrixT<S>&);              \
  extern template LossResult<S> softmax_cross_entropy(const MatrixT<S>&, std::span<const std::int32_t>); \
  extern template LossResult<S> link_logistic(                                                     \
      const MatrixT<S>&, std::span<const std::pair<std::uint32_t, std::uint32_t>>,                 \
      std::span<const std::pair<std::uint32_t, std::uint32_t>>);                                   \
  extern template double accuracy(const MatrixT<S>&, std::span<const std::int32_t>);                \
  extern template double link_hit_rate(const MatrixT<S>&,                                          \
                                       std::span<const std::pair<std::uint32_t, std::uint32_t>>,   \
                                       std::span<const std::pair<std::uint32_t, std::uint32_t>>);  \
  extern template void sgd_apply(SageModel<S>&, std::span<const S>, S);

HFG_MODEL_EXTERN(float)
HFG_MODEL_EXTERN(double)
#undef HFG_MODEL_EXTERN

}  // namespace hfg

#endif  // HFG_MODEL_H_
