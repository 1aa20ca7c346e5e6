/**
 *  Copyright (c) 2026 by Contributors
 * @file hfg/trainer.h
 * @brief Synchronous data-parallel SGD over pipeline-fed mini-batches.
 */
#ifndef HFG_TRAINER_H_
#define HFG_TRAINER_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include "hfg/collective.h"
#include "hfg/model.h"
#include "hfg/pipeline.h"

namespace hfg {

struct TrainConfig {
  std::uint32_t layers = 3;
  std::uint32_t hidden = 256;
  /// fanouts[l] is used when sampling block l (0 = input layer).
  std::vector<std::uint32_t> fanouts{15, 10, 5};
  std::size_t batch_size = 1000;
  float lr = 0.1f;
  std::uint32_t epochs = 1;
  TaskKind task = TaskKind::Vertex;
  std::uint32_t num_negatives = 1;
  std::uint64_t seed = 0;
  /// Caps the steps of every epoch.
  std::optional<std::size_t> max_steps_per_epoch;

  /// Throws ConfigError.
  void validate() const;
  FanoutPlan plan() const { return {fanouts}; }
  std::vector<std::uint32_t> dims(std::uint32_t in_dim, std::uint32_t out_dim) const;
};

/// Global steps per epoch: every trainer runs min_i floor(n_i / B) full
/// batches. Throws ConfigError when that is zero.
std::size_t steps_per_epoch(std::span<const std::uint64_t> train_counts, std::size_t batch_size,
                            std::optional<std::size_t> cap = std::nullopt);

struct StepLog {
  std::uint64_t epoch = 0;
  std::uint64_t step = 0;
  float loss = 0;
  /// Seconds since the start of the epoch when the step finished.
  double epoch_wall_s = 0;
};

void write_train_log(const std::filesystem::path& path, std::span<const StepLog> log);

struct StepResult {
  float loss = 0;
  std::vector<float> grads;
};

/// model <- model - lr * mean over the group of `grads`; with no group the
/// local gradients are used as is.
void sync_step(CollectiveGroup* group, SageModel<float>& model, std::span<const float> grads, float lr);

class Trainer {
 public:
  using LabelFn = std::function<std::int32_t(VertexId)>;

  /// `group` may be null for a single trainer. `labels` is required for the
  /// vertex task.
  Trainer(TrainConfig cfg, SageModel<float> model, CollectiveGroup* group, LabelFn labels);

  /// Local loss and flattened gradients for one batch.
  StepResult compute(const MiniBatch& batch) const;
  /// compute + collective update. Returns the group-mean loss.
  float step(const MiniBatch& batch);

  /// Vertex task: correct predictions. Link task: positives above all their
  /// negatives. Returns {hits, total} for this batch.
  std::pair<std::uint64_t, std::uint64_t> score(const MiniBatch& batch) const;

  const SageModel<float>& model() const { return model_; }
  SageModel<float>& model() { return model_; }
  const TrainConfig& config() const { return cfg_; }
  CollectiveGroup* group() const { return group_; }

 private:
  std::vector<std::int32_t> labels_of(const MiniBatch& batch) const;

  TrainConfig cfg_;
  SageModel<float> model_;
  CollectiveGroup* group_;
  LabelFn labels_;
};

/// Input features of a batch as a matrix in input_nodes() order.
MatrixT<float> feature_matrix(const MiniBatch& batch);

struct TrainLoopOptions {
  std::size_t steps_per_epoch = 0;
  std::uint32_t epochs = 1;
  /// Records Train and Update stages when set.
  Pipeline* pipeline = nullptr;
  std::function<void(const StepLog&)> on_step;
  /// Called after every epoch with the epoch index.
  std::function<void(std::uint64_t)> on_epoch;
};

std::vector<StepLog> train_loop(Trainer& trainer, BatchSource& source, const TrainLoopOptions& opts);

/// Scores `num_batches` batches from `source` and reduces over the group.
double evaluate(const Trainer& trainer, BatchSource& source, std::size_t num_batches,
                CollectiveGroup* group);

}  // namespace hfg

#endif  // HFG_TRAINER_H_
