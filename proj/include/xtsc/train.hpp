#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "xtsc/injection.hpp"
#include "xtsc/models.hpp"

namespace xtsc::nn {

struct TrainConfig {
  int max_epochs = 500;
  int patience = 20;
  double learning_rate = 1e-3;
  std::size_t batch_size = 32;
  /// Stratified hold-out from the training split used for early stopping.
  double validation_fraction = 0.2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t seed = 0;
};

struct EpochStats {
  int epoch = 0;
  /// Mean minibatch loss over the epoch.
  double train_loss = 0.0;
  double validation_loss = 0.0;
  double validation_accuracy = 0.0;
};

struct TrainingHistory {
  std::vector<EpochStats> epochs;
  int best_epoch = 0;
  double best_validation_loss = 0.0;
  bool early_stopped = false;
};

/// Adam on mean cross-entropy. Stops after max_epochs or once the validation
/// loss has not improved for `patience` consecutive epochs, then restores the
/// best-validation snapshot. Throws DegenerateLabels when only one class is
/// present and InvalidParameter for an inconsistent config.
TrainingHistory train(NeuralClassifier& model, std::span<const LabeledInstance> train_split, const TrainConfig& cfg);

/// Mean cross-entropy of the model over a split.
double mean_loss(const NeuralClassifier& model, std::span<const LabeledInstance> split);

}  // namespace xtsc::nn
