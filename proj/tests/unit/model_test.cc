#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

#include "hfg/error.h"
#include "hfg/model.h"
#include "hfg/rng.h"
#include "hfg/trainer.h"
#include "support.h"

namespace hfg {
namespace {

using Pairs = std::vector<std::pair<std::uint32_t, std::uint32_t>>;

// One destination with no neighbors; its own features are the only input.
CompactMiniBatch lone_vertex(std::size_t layers) {
  CompactMiniBatch b;
  b.seeds = {0};
  b.blocks.resize(layers);
  for (auto& blk : b.blocks) {
    blk.src_nodes = {0};
    blk.num_dst = 1;
  }
  return b;
}

TEST(SageModel, ZeroWeightsGiveZeroOutputs) {
  const Dataset d = generate_planted(testing::two_type_spec(30, 15, 4, 3));
  TargetBatch t;
  t.seeds = {0, 5, 31};
  const MiniBatch mb = testing::local_minibatch(d, t, FanoutPlan{{3, 3}});
  const auto model = SageModel<float>::zeros(std::vector<std::uint32_t>{4, 6, 3});
  const MatrixT<float> out = forward(mb.graph, feature_matrix(mb), model);
  ASSERT_EQ(out.rows(), 3);
  ASSERT_EQ(out.cols(), 3);
  EXPECT_EQ(out.cwiseAbs().maxCoeff(), 0.0f);
}

TEST(SageModel, FullFanoutMatchesDenseOracle) {
  const Dataset d = generate_planted(testing::two_type_spec(20, 10, 5, 12));
  const std::vector<std::uint32_t> dims{5, 7, 3};
  const auto model = SageModel<double>::init(dims, 4);
  const MatrixT<double> oracle = testing::dense_forward(d, model);
  TargetBatch t;
  for (VertexId v = 0; v < 30; ++v) t.seeds.push_back(v);
  const MiniBatch mb = testing::local_minibatch(d, t, FanoutPlan::full(2));
  const MatrixT<double> out = forward(mb.graph, MatrixT<double>(feature_matrix(mb).cast<double>()), model);
  ASSERT_EQ(out.rows(), 30);
  for (Eigen::Index i = 0; i < 30; ++i) {
    const auto v = static_cast<Eigen::Index>(mb.graph.seeds[i]);
    EXPECT_LE((out.row(i) - oracle.row(v)).cwiseAbs().maxCoeff(), 1e-5) << "vertex " << v;
  }
}

TEST(SageModel, IdentityOnALoneVertex) {
  auto model = SageModel<float>::zeros(std::vector<std::uint32_t>{3, 3});
  model.layers[0].w_self = MatrixT<float>::Identity(3, 3);
  MatrixT<float> x(1, 3);
  x << 0.5f, 2.0f, 7.0f;
  EXPECT_EQ(forward(lone_vertex(1), x, model), x);

  auto deep = SageModel<float>::zeros(std::vector<std::uint32_t>{3, 3, 3});
  deep.layers[0].w_self = deep.layers[1].w_self = MatrixT<float>::Identity(3, 3);
  EXPECT_EQ(forward(lone_vertex(2), x, deep), x);
}

TEST(SageModel, HiddenLayersApplyReluButTheLastDoesNot) {
  auto model = SageModel<float>::zeros(std::vector<std::uint32_t>{1, 1, 1});
  model.layers[0].w_self(0, 0) = -1.0f;
  model.layers[1].w_self(0, 0) = 1.0f;
  model.layers[1].bias(0) = -2.0f;
  MatrixT<float> x(1, 1);
  x << 3.0f;
  // ReLU(-3) = 0 in the hidden layer, then 0 * 1 - 2 with no ReLU.
  EXPECT_EQ(forward(lone_vertex(2), x, model)(0, 0), -2.0f);
}

TEST(SageModel, FeatureWidthMismatchIsStructuralError) {
  const auto model = SageModel<float>::zeros(std::vector<std::uint32_t>{4, 2});
  const MatrixT<float> x = MatrixT<float>::Ones(1, 3);
  EXPECT_THROW(forward(lone_vertex(1), x, model), StructuralError);
  EXPECT_THROW(forward(lone_vertex(2), MatrixT<float>(MatrixT<float>::Ones(1, 4)), model), StructuralError);
}

class Backprop : public ::testing::Test {
 protected:
  Backprop() : data_(generate_planted(testing::two_type_spec(40, 20, 6, 5))) {
    TargetBatch t;
    for (VertexId v = 0; v < 10; ++v) t.seeds.push_back(v * 5);
    mb_ = testing::local_minibatch(data_, t, FanoutPlan{{4, 4}});
    x_ = feature_matrix(mb_).cast<double>();
    model_ = SageModel<double>::init(std::vector<std::uint32_t>{6, 5, 4}, 2);
    out_ = forward(mb_.graph, x_, model_, &cache_);
  }

  Dataset data_;
  MiniBatch mb_;
  MatrixT<double> x_;
  SageModel<double> model_;
  ForwardCache<double> cache_;
  MatrixT<double> out_;
};

TEST_F(Backprop, ZeroLossGradientGivesZeroGradients) {
  const auto g = backward(mb_.graph, model_, cache_, MatrixT<double>(MatrixT<double>::Zero(out_.rows(), out_.cols())));
  for (double v : g.flatten()) EXPECT_EQ(v, 0.0);
}

TEST_F(Backprop, DoublingTheLossDoublesTheGradient) {
  StreamRng rng({6});
  MatrixT<double> dy(out_.rows(), out_.cols());
  for (Eigen::Index i = 0; i < dy.size(); ++i) dy.data()[i] = rng.uniform_real() - 0.5;
  const auto one = backward(mb_.graph, model_, cache_, dy).flatten();
  const auto two = backward(mb_.graph, model_, cache_, MatrixT<double>(2.0 * dy)).flatten();
  ASSERT_EQ(one.size(), model_.num_params());
  for (std::size_t i = 0; i < one.size(); ++i) EXPECT_EQ(two[i], 2.0 * one[i]);
}

TEST_F(Backprop, MatchesCentralDifferences) {
  std::vector<std::int32_t> y;
  for (VertexId v : mb_.graph.seeds) y.push_back(data_.labels[v]);
  const auto analytic = backward(mb_.graph, model_, cache_, softmax_cross_entropy(out_, y).grad).flatten();
  const auto base = model_.flatten();
  SageModel<double> probe = model_;
  constexpr double h = 1e-3;
  for (std::size_t p = 0; p < base.size(); ++p) {
    auto v = base;
    v[p] = base[p] + h;
    probe.unflatten(v);
    const double up = softmax_cross_entropy(forward(mb_.graph, x_, probe), y).loss;
    v[p] = base[p] - h;
    probe.unflatten(v);
    const double down = softmax_cross_entropy(forward(mb_.graph, x_, probe), y).loss;
    const double numeric = (up - down) / (2 * h);
    const double scale = std::max({std::abs(numeric), std::abs(analytic[p]), 1e-8});
    EXPECT_LT(std::abs(numeric - analytic[p]) / scale, 1e-4) << "parameter " << p;
  }
}

TEST_F(Backprop, LinkLossMatchesCentralDifferences) {
  MatrixT<double> emb = out_;
  const Pairs pos{{0, 1}, {2, 3}, {4, 9}};
  const Pairs neg{{0, 5}, {2, 7}, {4, 6}};
  const auto r = link_logistic(emb, pos, neg);
  constexpr double h = 1e-5;
  for (Eigen::Index i = 0; i < emb.size(); ++i) {
    MatrixT<double> e = emb;
    e.data()[i] += h;
    const double up = link_logistic(e, pos, neg).loss;
    e.data()[i] -= 2 * h;
    const double down = link_logistic(e, pos, neg).loss;
    EXPECT_NEAR((up - down) / (2 * h), r.grad.data()[i], 1e-7);
  }
}

TEST(Loss, UniformLogitsCostLogClasses) {
  const MatrixT<double> logits = MatrixT<double>::Zero(4, 2);
  const std::vector<std::int32_t> y{0, 1, 1, 0};
  const auto r = softmax_cross_entropy(logits, y);
  EXPECT_NEAR(r.loss, std::log(2.0), 1e-12);
  EXPECT_NEAR(r.grad(0, 0), -0.125, 1e-12);
  EXPECT_NEAR(r.grad(0, 1), 0.125, 1e-12);
  const std::vector<std::int32_t> bad{0, 1, 2, 0};
  EXPECT_THROW(softmax_cross_entropy(logits, bad), StructuralError);
}

TEST(Metrics, OneHotOfTheTruthScoresOne) {
  const std::vector<std::int32_t> y{2, 0, 1, 2};
  MatrixT<float> logits = MatrixT<float>::Zero(4, 3);
  for (Eigen::Index i = 0; i < 4; ++i) logits(i, y[i]) = 1.0f;
  EXPECT_EQ(accuracy(logits, y), 1.0);
}

TEST(Metrics, RandomLabelsScoreAboutHalf) {
  StreamRng rng({44});
  const auto model = SageModel<float>::init(std::vector<std::uint32_t>{3, 2}, 9);
  constexpr Eigen::Index n = 4000;
  MatrixT<float> x(n, 3);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = static_cast<float>(rng.uniform_real());
  // Every vertex on its own: one block per vertex stacked as one batch.
  CompactMiniBatch b;
  b.blocks.resize(1);
  for (Eigen::Index i = 0; i < n; ++i) {
    b.seeds.push_back(static_cast<VertexId>(i));
    b.blocks[0].src_nodes.push_back(static_cast<VertexId>(i));
  }
  b.blocks[0].num_dst = static_cast<std::uint32_t>(n);
  std::vector<std::int32_t> y(n);
  for (auto& v : y) v = static_cast<std::int32_t>(rng.uniform(2));
  EXPECT_NEAR(accuracy(forward(b, x, model), y), 0.5, 0.05);
}

TEST(Metrics, LinkHitRate) {
  MatrixT<float> emb(3, 2);
  emb << 1, 1, 1, 1, 1, 0;
  const Pairs pos{{0, 1}};
  const Pairs neg{{0, 2}};
  EXPECT_EQ(link_hit_rate(emb, pos, neg), 1.0);
  EXPECT_EQ(link_hit_rate(emb, neg, pos), 0.0);
  EXPECT_THROW(link_hit_rate(emb, Pairs{}, Pairs{}), ConfigError);
}

TEST(SageModel, FlattenRoundTripsAndSgdSubtracts) {
  auto m = SageModel<float>::init(std::vector<std::uint32_t>{4, 3, 2}, 1);
  EXPECT_EQ(m.num_params(), 4u * 3 * 2 + 3 + 3u * 2 * 2 + 2);
  const auto flat = m.flatten();
  auto copy = SageModel<float>::zeros(m.dims());
  copy.unflatten(flat);
  EXPECT_TRUE(copy == m);
  std::vector<float> g(flat.size(), 0.5f);
  sgd_apply(copy, std::span<const float>(g), 0.1f);
  const auto after = copy.flatten();
  for (std::size_t i = 0; i < flat.size(); ++i) EXPECT_EQ(after[i], flat[i] - 0.1f * 0.5f);
  EXPECT_THROW(copy.unflatten(std::vector<float>(3)), StructuralError);
}

TEST(SageModel, InitIsSeededAndBounded) {
  const std::vector<std::uint32_t> dims{16, 8};
  const auto a = SageModel<float>::init(dims, 5);
  EXPECT_TRUE(a == SageModel<float>::init(dims, 5));
  EXPECT_FALSE(a == SageModel<float>::init(dims, 6));
  EXPECT_LE(a.layers[0].w_self.cwiseAbs().maxCoeff(), 0.25f);
  EXPECT_LE(a.layers[0].w_neigh.cwiseAbs().maxCoeff(), 0.25f);
}

TEST(Checkpoint, RoundTripsBitwise) {
  const auto m = SageModel<float>::init(std::vector<std::uint32_t>{5, 4, 3}, 8);
  const auto dir = testing::temp_dir("ckpt");
  save_checkpoint(dir / "m.ckpt", m);
  EXPECT_TRUE(load_checkpoint(dir / "m.ckpt") == m);
  {
    std::ofstream junk(dir / "bad.ckpt", std::ios::binary);
    junk << "nope";
  }
  EXPECT_THROW(load_checkpoint(dir / "bad.ckpt"), IoError);
  EXPECT_THROW(load_checkpoint(dir / "missing.ckpt"), IoError);
}

}  // namespace
}  // namespace hfg
