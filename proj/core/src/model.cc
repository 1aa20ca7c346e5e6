/**
 *  Copyright (c) 2026 by Contributors
 * @file model.cc
 */
#include "hfg/model.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <unordered_map>

#include "hfg/bytes.h"
#include "hfg/error.h"
#include "hfg/graph_io.h"
#include "hfg/rng.h"

namespace hfg {

namespace {

/// 1 / |N_t(v)| for every edge of the block.
template <typename S>
std::vector<S> mean_weights(const CompactBlock& b) {
  TypeId ntypes = 0;
  for (TypeId t : b.edge_types) ntypes = std::max<TypeId>(ntypes, t + 1);
  std::unordered_map<std::uint64_t, std::uint32_t> count;
  auto key = [&](std::size_t e) { return std::uint64_t{b.edge_dst[e]} * ntypes + b.edge_types[e]; };
  for (std::size_t e = 0; e < b.num_edges(); ++e) ++count[key(e)];
  std::vector<S> w(b.num_edges());
  for (std::size_t e = 0; e < b.num_edges(); ++e) w[e] = S(1) / static_cast<S>(count[key(e)]);
  return w;
}

void check_block(const CompactBlock& b) {
  if (b.edge_src.size() != b.edge_dst.size() || b.edge_types.size() != b.edge_src.size()) {
    throw StructuralError("block edge arrays differ in length");
  }
  if (b.num_dst > b.num_src()) throw StructuralError("block has more destinations than sources");
  for (std::size_t e = 0; e < b.num_edges(); ++e) {
    if (b.edge_src[e] >= b.num_src() || b.edge_dst[e] >= b.num_dst) {
      throw StructuralError("block edge endpoint out of range");
    }
  }
}

template <typename S>
void fill_uniform(MatrixT<S>& m, StreamRng& rng, double a) {
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<S>((rng.uniform_real() * 2 - 1) * a);
}

template <typename S>
void fill_uniform(RowVectorT<S>& m, StreamRng& rng, double a) {
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<S>((rng.uniform_real() * 2 - 1) * a);
}

}  // namespace

template <typename S>
SageModel<S> SageModel<S>::zeros(std::span<const std::uint32_t> dims) {
  if (dims.size() < 2) throw ConfigError("a model needs at least one layer");
  SageModel m;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    if (dims[l] == 0 || dims[l + 1] == 0) throw ConfigError("layer dimensions must be positive");
    m.layers.push_back({MatrixT<S>::Zero(dims[l], dims[l + 1]), MatrixT<S>::Zero(dims[l], dims[l + 1]),
                        RowVectorT<S>::Zero(dims[l + 1])});
  }
  return m;
}

template <typename S>
SageModel<S> SageModel<S>::init(std::span<const std::uint32_t> dims, std::uint64_t seed) {
  SageModel m = zeros(dims);
  for (std::size_t l = 0; l < m.layers.size(); ++l) {
    const double a = 1.0 / std::sqrt(static_cast<double>(dims[l]));
    StreamRng rng({seed, l, 0x53414745ULL});
    fill_uniform(m.layers[l].w_self, rng, a);
    fill_uniform(m.layers[l].w_neigh, rng, a);
    fill_uniform(m.layers[l].bias, rng, a);
  }
  return m;
}

template <typename S>
std::vector<std::uint32_t> SageModel<S>::dims() const {
  std::vector<std::uint32_t> d;
  if (layers.empty()) return d;
  d.push_back(static_cast<std::uint32_t>(layers.front().d_in()));
  for (const auto& l : layers) d.push_back(static_cast<std::uint32_t>(l.d_out()));
  return d;
}

template <typename S>
std::size_t SageModel<S>::num_params() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.w_self.size() + l.w_neigh.size() + l.bias.size();
  return n;
}

template <typename S>
std::vector<S> SageModel<S>::flatten() const {
  std::vector<S> out;
  out.reserve(num_params());
  for (const auto& l : layers) {
    out.insert(out.end(), l.w_self.data(), l.w_self.data() + l.w_self.size());
    out.insert(out.end(), l.w_neigh.data(), l.w_neigh.data() + l.w_neigh.size());
    out.insert(out.end(), l.bias.data(), l.bias.data() + l.bias.size());
  }
  return out;
}

template <typename S>
void SageModel<S>::unflatten(std::span<const S> values) {
  if (values.size() != num_params()) throw StructuralError("parameter vector has the wrong length");
  const S* p = values.data();
  for (auto& l : layers) {
    std::copy_n(p, l.w_self.size(), l.w_self.data());
    p += l.w_self.size();
    std::copy_n(p, l.w_neigh.size(), l.w_neigh.data());
    p += l.w_neigh.size();
    std::copy_n(p, l.bias.size(), l.bias.data());
    p += l.bias.size();
  }
}

template <typename S>
void SageModel<S>::validate() const {
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    if (l.w_neigh.rows() != l.d_in() || l.w_neigh.cols() != l.d_out() || l.bias.size() != l.d_out()) {
      throw StructuralError("layer " + std::to_string(i) + " has inconsistent shapes");
    }
    if (i > 0 && layers[i - 1].d_out() != l.d_in()) {
      throw StructuralError("layer " + std::to_string(i) + " input does not match previous output");
    }
    if (!l.w_self.allFinite() || !l.w_neigh.allFinite() || !l.bias.allFinite()) {
      throw StructuralError("layer " + std::to_string(i) + " has non-finite parameters");
    }
  }
}

template <typename S>
bool SageModel<S>::operator==(const SageModel& o) const {
  if (layers.size() != o.layers.size()) return false;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& a = layers[i];
    const auto& b = o.layers[i];
    if (a.w_self.rows() != b.w_self.rows() || a.w_self.cols() != b.w_self.cols()) return false;
    if (a.w_self != b.w_self || a.w_neigh != b.w_neigh || a.bias != b.bias) return false;
  }
  return true;
}

template <typename S>
MatrixT<S> forward(const CompactMiniBatch& batch, const MatrixT<S>& feats, const SageModel<S>& model,
                   ForwardCache<S>* cache) {
  if (batch.blocks.size() != model.layers.size()) {
    throw StructuralError("mini-batch has " + std::to_string(batch.blocks.size()) + " blocks, model has " +
                          std::to_string(model.layers.size()) + " layers");
  }
  if (cache) *cache = {};
  MatrixT<S> h = feats;
  const std::size_t L = model.layers.size();
  for (std::size_t l = 0; l < L; ++l) {
    const CompactBlock& b = batch.blocks[l];
    const SageLayer<S>& layer = model.layers[l];
    check_block(b);
    if (static_cast<std::size_t>(h.rows()) != b.num_src()) {
      throw StructuralError("layer " + std::to_string(l) + " input has " + std::to_string(h.rows()) +
                            " rows, block has " + std::to_string(b.num_src()) + " sources");
    }
    if (h.cols() != layer.d_in()) {
      throw StructuralError("layer " + std::to_string(l) + " expects width " + std::to_string(layer.d_in()) +
                            ", got " + std::to_string(h.cols()));
    }
    const auto w = mean_weights<S>(b);
    MatrixT<S> agg = MatrixT<S>::Zero(b.num_dst, h.cols());
    for (std::size_t e = 0; e < b.num_edges(); ++e) agg.row(b.edge_dst[e]) += w[e] * h.row(b.edge_src[e]);
    MatrixT<S> pre = h.topRows(b.num_dst) * layer.w_self + agg * layer.w_neigh;
    pre.rowwise() += layer.bias;
    MatrixT<S> out = l + 1 == L ? pre : MatrixT<S>(pre.cwiseMax(S(0)));
    if (cache) {
      cache->inputs.push_back(std::move(h));
      cache->agg.push_back(std::move(agg));
      cache->pre.push_back(std::move(pre));
    }
    h = std::move(out);
  }
  if (cache) cache->inputs.push_back(h);
  return h;
}

template <typename S>
GradientSet<S> backward(const CompactMiniBatch& batch, const SageModel<S>& model,
                        const ForwardCache<S>& cache, const MatrixT<S>& out_grad) {
  const std::size_t L = model.layers.size();
  if (cache.pre.size() != L || batch.blocks.size() != L) throw StructuralError("forward cache does not match model");
  GradientSet<S> g = SageModel<S>::zeros(model.dims());
  MatrixT<S> d = out_grad;
  for (std::size_t l = L; l-- > 0;) {
    const CompactBlock& b = batch.blocks[l];
    const SageLayer<S>& layer = model.layers[l];
    if (d.rows() != cache.pre[l].rows() || d.cols() != cache.pre[l].cols()) {
      throw StructuralError("output gradient shape does not match layer " + std::to_string(l));
    }
    if (l + 1 != L) d = (cache.pre[l].array() > S(0)).select(d, S(0));
    const MatrixT<S>& h = cache.inputs[l];
    g.layers[l].w_self.noalias() = h.topRows(b.num_dst).transpose() * d;
    g.layers[l].w_neigh.noalias() = cache.agg[l].transpose() * d;
    g.layers[l].bias = d.colwise().sum();
    if (l == 0) break;
    MatrixT<S> dh = MatrixT<S>::Zero(h.rows(), h.cols());
    dh.topRows(b.num_dst).noalias() += d * layer.w_self.transpose();
    const MatrixT<S> da = d * layer.w_neigh.transpose();
    const auto w = mean_weights<S>(b);
    for (std::size_t e = 0; e < b.num_edges(); ++e) dh.row(b.edge_src[e]) += w[e] * da.row(b.edge_dst[e]);
    d = std::move(dh);
  }
  return g;
}

template <typename S>
LossResult<S> softmax_cross_entropy(const MatrixT<S>& logits, std::span<const std::int32_t> labels) {
  if (static_cast<std::size_t>(logits.rows()) != labels.size()) {
    throw StructuralError("label count does not match output rows");
  }
  LossResult<S> r;
  r.grad = MatrixT<S>::Zero(logits.rows(), logits.cols());
  if (logits.rows() == 0) return r;
  const S inv_n = S(1) / static_cast<S>(logits.rows());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const std::int32_t y = labels[i];
    if (y < 0 || y >= logits.cols()) {
      throw StructuralError("label " + std::to_string(y) + " outside [0, " + std::to_string(logits.cols()) + ")");
    }
    const S m = logits.row(i).maxCoeff();
    RowVectorT<S> e = (logits.row(i).array() - m).exp();
    const S z = e.sum();
    r.loss += (std::log(z) - (logits(i, y) - m)) * inv_n;
    r.grad.row(i) = e / z * inv_n;
    r.grad(i, y) -= inv_n;
  }
  return r;
}

template <typename S>
LossResult<S> link_logistic(const MatrixT<S>& emb,
                            std::span<const std::pair<std::uint32_t, std::uint32_t>> positives,
                            std::span<const std::pair<std::uint32_t, std::uint32_t>> negatives) {
  LossResult<S> r;
  r.grad = MatrixT<S>::Zero(emb.rows(), emb.cols());
  const std::size_t n = positives.size() + negatives.size();
  if (n == 0) return r;
  const S inv_n = S(1) / static_cast<S>(n);
  auto term = [&](std::pair<std::uint32_t, std::uint32_t> p, S y) {
    if (p.first >= emb.rows() || p.second >= emb.rows()) throw StructuralError("link pair row out of range");
    const S s = emb.row(p.first).dot(emb.row(p.second));
    // log(1 + exp(-s)) for y = 1, log(1 + exp(s)) for y = 0, computed stably.
    const S t = y > S(0) ? -s : s;
    r.loss += (std::max(t, S(0)) + std::log1p(std::exp(-std::abs(t)))) * inv_n;
    const S sig = S(1) / (S(1) + std::exp(-s));
    const S ds = (sig - y) * inv_n;
    const RowVectorT<S> a = emb.row(p.first);
    const RowVectorT<S> b = emb.row(p.second);
    r.grad.row(p.first) += ds * b;
    r.grad.row(p.second) += ds * a;
  };
  for (const auto& p : positives) term(p, S(1));
  for (const auto& p : negatives) term(p, S(0));
  return r;
}

template <typename S>
double accuracy(const MatrixT<S>& logits, std::span<const std::int32_t> labels) {
  if (logits.rows() == 0) throw ConfigError("accuracy over an empty split");
  if (static_cast<std::size_t>(logits.rows()) != labels.size()) {
    throw StructuralError("label count does not match output rows");
  }
  std::size_t hit = 0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    Eigen::Index arg = 0;
    logits.row(i).maxCoeff(&arg);
    hit += arg == labels[i] ? 1 : 0;
  }
  return static_cast<double>(hit) / static_cast<double>(logits.rows());
}

template <typename S>
double link_hit_rate(const MatrixT<S>& emb,
                     std::span<const std::pair<std::uint32_t, std::uint32_t>> positives,
                     std::span<const std::pair<std::uint32_t, std::uint32_t>> negatives) {
  if (positives.empty()) throw ConfigError("hit rate over an empty split");
  if (negatives.size() % positives.size() != 0) {
    throw StructuralError("negatives are not a whole multiple of positives");
  }
  const std::size_t k = negatives.size() / positives.size();
  auto score = [&](std::pair<std::uint32_t, std::uint32_t> p) {
    return emb.row(p.first).dot(emb.row(p.second));
  };
  std::size_t hit = 0;
  for (std::size_t i = 0; i < positives.size(); ++i) {
    const S sp = score(positives[i]);
    bool above = true;
    for (std::size_t j = 0; j < k; ++j) above = above && sp > score(negatives[i * k + j]);
    hit += above ? 1 : 0;
  }
  return static_cast<double>(hit) / static_cast<double>(positives.size());
}

template <typename S>
void sgd_apply(SageModel<S>& model, std::span<const S> grads, S lr) {
  if (grads.size() != model.num_params()) throw StructuralError("gradient vector has the wrong length");
  const S* g = grads.data();
  auto step = [&](S* p, Eigen::Index n) {
    for (Eigen::Index i = 0; i < n; ++i) p[i] -= lr * g[i];
    g += n;
  };
  for (auto& l : model.layers) {
    step(l.w_self.data(), l.w_self.size());
    step(l.w_neigh.data(), l.w_neigh.size());
    step(l.bias.data(), l.bias.size());
  }
}

void save_checkpoint(const std::filesystem::path& path, const SageModel<float>& model) {
  ByteWriter w;
  w.put_raw(std::as_bytes(std::span("HFC1", 4)));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(model.layers.size()));
  for (const auto& l : model.layers) {
    w.put<std::uint32_t>(static_cast<std::uint32_t>(l.d_in()));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(l.d_out()));
    w.put_span<float>({l.w_self.data(), static_cast<std::size_t>(l.w_self.size())});
    w.put_span<float>({l.w_neigh.data(), static_cast<std::size_t>(l.w_neigh.size())});
    w.put_span<float>({l.bias.data(), static_cast<std::size_t>(l.bias.size())});
  }
  const Bytes data = w.take();
  write_file(path, data);
}

SageModel<float> load_checkpoint(const std::filesystem::path& path) {
  const Bytes data = read_file(path);
  try {
    ByteReader r(data);
    const auto magic = r.get_raw(4);
    if (std::memcmp(magic.data(), "HFC1", 4) != 0) throw IoError(path.string(), "not a checkpoint");
    const auto layers = r.get<std::uint32_t>();
    std::vector<std::uint32_t> dims;
    SageModel<float> m;
    for (std::uint32_t i = 0; i < layers; ++i) {
      const auto din = r.get<std::uint32_t>();
      const auto dout = r.get<std::uint32_t>();
      if (std::uint64_t{din} * dout > r.remaining()) throw IoError(path.string(), "truncated checkpoint");
      SageLayer<float> l{MatrixT<float>(din, dout), MatrixT<float>(din, dout), RowVectorT<float>(dout)};
      r.get_span<float>({l.w_self.data(), static_cast<std::size_t>(l.w_self.size())});
      r.get_span<float>({l.w_neigh.data(), static_cast<std::size_t>(l.w_neigh.size())});
      r.get_span<float>({l.bias.data(), static_cast<std::size_t>(l.bias.size())});
      m.layers.push_back(std::move(l));
    }
    r.expect_done();
    m.validate();
    return m;
  } catch (const IoError&) {
    throw;
  } catch (const Error& e) {
    throw IoError(path.string(), e.what());
  }
}

#define HFG_MODEL_INSTANTIATE(S)                                                                     \
  template struct SageModel<S>;                                                                     \
  template MatrixT<S> forward(const CompactMiniBatch&, const MatrixT<S>&, const SageModel<S>&,      \
                              ForwardCache<S>*);                                                    \
  template GradientSet<S> backward(const CompactMiniBatch&, const SageModel<S>&, const ForwardCache<S>&, \
                                   const MatrixT<S>&);                                              \
  template LossResult<S> softmax_cross_entropy(const MatrixT<S>&, std::span<const std::int32_t>);   \
  template LossResult<S> link_logistic(const MatrixT<S>&,                                           \
                                       std::span<const std::pair<std::uint32_t, std::uint32_t>>,    \
                                       std::span<const std::pair<std::uint32_t, std::uint32_t>>);   \
  template double accuracy(const MatrixT<S>&, std::span<const std::int32_t>);                       \
  template double link_hit_rate(const MatrixT<S>&, std::span<const std::pair<std::uint32_t, std::uint32_t>>, \
                                std::span<const std::pair<std::uint32_t, std::uint32_t>>);          \
  template void sgd_apply(SageModel<S>&, std::span<const S>, S);

HFG_MODEL_INSTANTIATE(float)
HFG_MODEL_INSTANTIATE(double)

}  // namespace hfg
