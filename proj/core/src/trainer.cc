/**
 *  Copyright (c) 2026 by Contributors
 * @file trainer.cc
 */
#include "hfg/trainer.h"

#include <chrono>
#include <fstream>

#include "hfg/error.h"

namespace hfg {

void TrainConfig::validate() const {
  if (layers == 0) throw ConfigError("layers must be >= 1");
  if (fanouts.size() != layers) {
    throw ConfigError("fanouts has " + std::to_string(fanouts.size()) + " entries for " +
                      std::to_string(layers) + " layers");
  }
  for (auto f : fanouts) {
    if (f == 0) throw ConfigError("fanouts must be >= 1");
  }
  if (hidden == 0) throw ConfigError("hidden must be >= 1");
  if (batch_size == 0) throw ConfigError("batch size must be >= 1");
  if (!(lr >= 0)) throw ConfigError("learning rate must be >= 0");
  if (task == TaskKind::Link && num_negatives == 0) throw ConfigError("link task needs negatives");
}

std::vector<std::uint32_t> TrainConfig::dims(std::uint32_t in_dim, std::uint32_t out_dim) const {
  std::vector<std::uint32_t> d{in_dim};
  for (std::uint32_t l = 1; l < layers; ++l) d.push_back(hidden);
  d.push_back(out_dim);
  return d;
}

std::size_t steps_per_epoch(std::span<const std::uint64_t> train_counts, std::size_t batch_size,
                            std::optional<std::size_t> cap) {
  if (train_counts.empty()) throw ConfigError("no trainers");
  if (batch_size == 0) throw ConfigError("batch size must be >= 1");
  std::uint64_t steps = ~std::uint64_t{0};
  for (auto n : train_counts) steps = std::min<std::uint64_t>(steps, n / batch_size);
  if (steps == 0) {
    throw ConfigError("some trainer has fewer than " + std::to_string(batch_size) +
                      " training targets; lower the batch size");
  }
  if (cap) steps = std::min<std::uint64_t>(steps, *cap);
  return steps;
}

void write_train_log(const std::filesystem::path& path, std::span<const StepLog> log) {
  std::ofstream out(path);
  if (!out) throw IoError(path.string(), "cannot open for writing");
  out << "epoch,step,loss,epoch_wall_s\n";
  for (const auto& s : log) out << s.epoch << ',' << s.step << ',' << s.loss << ',' << s.epoch_wall_s << '\n';
}

namespace {

std::vector<float> reduce(CollectiveGroup* group, std::vector<float> values) {
  if (group == nullptr || group->size() == 1) return values;
  return group->allreduce_mean(values);
}

}  // namespace

void sync_step(CollectiveGroup* group, SageModel<float>& model, std::span<const float> grads, float lr) {
  const auto mean = reduce(group, {grads.begin(), grads.end()});
  sgd_apply<float>(model, mean, lr);
}

Trainer::Trainer(TrainConfig cfg, SageModel<float> model, CollectiveGroup* group, LabelFn labels)
    : cfg_(std::move(cfg)), model_(std::move(model)), group_(group), labels_(std::move(labels)) {
  cfg_.validate();
  model_.validate();
  if (model_.layers.size() != cfg_.layers) throw ConfigError("model depth differs from config");
  if (cfg_.task == TaskKind::Vertex && !labels_) throw ConfigError("vertex task needs labels");
}

MatrixT<float> feature_matrix(const MiniBatch& batch) {
  const auto rows = static_cast<Eigen::Index>(batch.graph.input_nodes().size());
  if (batch.features.size() != static_cast<std::size_t>(rows) * batch.feat_dim) {
    throw StructuralError("feature buffer does not match input nodes");
  }
  return Eigen::Map<const MatrixT<float>>(batch.features.data(), rows, batch.feat_dim);
}

std::vector<std::int32_t> Trainer::labels_of(const MiniBatch& batch) const {
  std::vector<std::int32_t> y;
  y.reserve(batch.graph.seeds.size());
  for (VertexId v : batch.graph.seeds) y.push_back(labels_(v));
  return y;
}

StepResult Trainer::compute(const MiniBatch& batch) const {
  ForwardCache<float> cache;
  const MatrixT<float> out = forward(batch.graph, feature_matrix(batch), model_, &cache);
  LossResult<float> loss;
  if (cfg_.task == TaskKind::Vertex) {
    loss = softmax_cross_entropy(out, labels_of(batch));
  } else {
    loss = link_logistic(out, batch.graph.positives, batch.graph.negatives);
  }
  const GradientSet<float> g = backward(batch.graph, model_, cache, loss.grad);
  return {loss.loss, g.flatten()};
}

float Trainer::step(const MiniBatch& batch) {
  StepResult r = compute(batch);
  r.grads.push_back(r.loss);
  auto mean = reduce(group_, std::move(r.grads));
  const float loss = mean.back();
  mean.pop_back();
  sgd_apply<float>(model_, mean, cfg_.lr);
  return loss;
}

std::pair<std::uint64_t, std::uint64_t> Trainer::score(const MiniBatch& batch) const {
  const MatrixT<float> out = forward(batch.graph, feature_matrix(batch), model_);
  if (cfg_.task == TaskKind::Vertex) {
    const auto y = labels_of(batch);
    if (y.empty()) return {0, 0};
    const double acc = accuracy(out, y);
    return {static_cast<std::uint64_t>(acc * static_cast<double>(y.size()) + 0.5), y.size()};
  }
  if (batch.graph.positives.empty()) return {0, 0};
  const double hr = link_hit_rate(out, batch.graph.positives, batch.graph.negatives);
  const std::size_t n = batch.graph.positives.size();
  return {static_cast<std::uint64_t>(hr * static_cast<double>(n) + 0.5), n};
}

std::vector<StepLog> train_loop(Trainer& trainer, BatchSource& source, const TrainLoopOptions& opts) {
  using Clock = std::chrono::steady_clock;
  std::vector<StepLog> log;
  std::uint64_t step = 0;
  for (std::uint64_t epoch = 0; epoch < opts.epochs; ++epoch) {
    const auto epoch_start = Clock::now();
    for (std::size_t s = 0; s < opts.steps_per_epoch; ++s, ++step) {
      const MiniBatch batch = source.next_minibatch();
      const auto t0 = Clock::now();
      StepResult r = trainer.compute(batch);
      const auto t1 = Clock::now();
      r.grads.push_back(r.loss);
      auto mean = reduce(trainer.group(), std::move(r.grads));
      const float loss = mean.back();
      mean.pop_back();
      sgd_apply<float>(trainer.model(), mean, trainer.config().lr);
      const auto t2 = Clock::now();
      if (opts.pipeline) {
        opts.pipeline->record_stage(batch.graph.seq_no, StageId::Train, t0, t1);
        opts.pipeline->record_stage(batch.graph.seq_no, StageId::Update, t1, t2, mean.size() * sizeof(float));
      }
      StepLog entry{epoch, step, loss, std::chrono::duration<double>(t2 - epoch_start).count()};
      if (opts.on_step) opts.on_step(entry);
      log.push_back(entry);
    }
    if (opts.on_epoch) opts.on_epoch(epoch);
  }
  return log;
}

double evaluate(const Trainer& trainer, BatchSource& source, std::size_t num_batches, CollectiveGroup* group) {
  std::uint64_t hits = 0;
  std::uint64_t total = 0;
  for (std::size_t i = 0; i < num_batches; ++i) {
    const auto [h, n] = trainer.score(source.next_minibatch());
    hits += h;
    total += n;
  }
  double h = static_cast<double>(hits);
  double n = static_cast<double>(total);
  if (group && group->size() > 1) {
    const auto mean = group->allreduce_mean(std::vector<float>{static_cast<float>(hits), static_cast<float>(total)});
    h = static_cast<double>(mean[0]) * group->size();
    n = static_cast<double>(mean[1]) * group->size();
  }
  if (n <= 0) throw ConfigError("evaluation split is empty");
  return h / n;
}

}  // namespace hfg
