#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "pcert/classifier.hpp"
#include "pcert/dataset.hpp"
#include "pcert/strategies.hpp"

namespace pcert {

struct TrainConfig {
  int epochs = 10;
  double learning_rate = 0.01;
  double momentum = 0.9;
  std::size_t batch_size = 64;
  std::uint64_t seed = 0;
  StrategyKind strategy = StrategyKind::kNone;
  /// Patch side the certification mask sets are built for.
  int patch_side = 5;
  int saliency_k = 3;
  std::optional<int> random_side;
  int random_count = 2;
  float fill = 0.0f;
  /// Also train on the clean image alongside its masked copies.
  bool include_clean = false;
  /// Select masks with the initial weights instead of the current ones.
  bool frozen_reference = false;
  std::size_t threads = 1;

  void validate() const;
};

/// Learning rate for a zero-based epoch: divided by 10 from epoch floor(epochs/2).
double learning_rate_at(const TrainConfig& cfg, int epoch);

struct EpochLog {
  int epoch = 0;
  double learning_rate = 0.0;
  double mean_loss = 0.0;
  std::size_t scheduled_evaluations = 0;
  std::size_t unique_evaluations = 0;
  std::size_t loss_terms = 0;
  /// Scheduled strategy evaluations of each batch, in batch order.
  std::vector<std::size_t> batch_scheduled;
};

struct TrainResult {
  MlpModel model;
  std::vector<EpochLog> log;
};

/// SGD with momentum where every batch is replaced by the configured strategy's
/// masked copies, selected against a snapshot of the weights at batch start.
TrainResult train(MlpModel model, const LabeledDataset& data, const TrainConfig& cfg);

/// Mean cross-entropy of `model` on the dataset's clean images.
double mean_loss(const MlpModel& model, const LabeledDataset& data);

}  // namespace pcert
