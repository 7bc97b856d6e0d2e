#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>

#include "identiface/dataset.hpp"
#include "identiface/model.hpp"

namespace identiface {

struct TrainConfig {
  double lr = 1e-4;
  std::size_t batch_size = 32;
  double test_size = 0.2;
  std::size_t epochs = 100;
  std::optional<std::size_t> patience;
  std::uint64_t seed = 0;
  /// Stop once an inference-mode pass over the training set reaches this accuracy.
  std::optional<double> stop_at_train_accuracy;
};

void validate_train_config(const TrainConfig& config);

/// Reference hyperparameters per task: recognition lr 1e-4, batch 32,
/// 100 epochs, no patience; gender (public set) batch 128, 15 epochs,
/// patience 3; face shape batch 128, 30 epochs, patience 7; emotion
/// batch 128, 40 epochs, patience 7. test_size 0.2 throughout.
TrainConfig reference_train_config(Task task);

/// Tracks validation loss and the weights of the best epoch. Training
/// stops once `patience` consecutive epochs fail to improve on the best.
template <typename Snapshot>
class EarlyStopper {
 public:
  explicit EarlyStopper(std::optional<std::size_t> patience) : patience_(patience) {}

  /// Returns true when val_loss improves on the best so far.
  bool observe(double val_loss, const Snapshot& snapshot) {
    ++epoch_;
    if (val_loss < best_loss_) {
      best_loss_ = val_loss;
      best_epoch_ = epoch_;
      best_ = snapshot;
      stale_ = 0;
      return true;
    }
    ++stale_;
    return false;
  }

  bool should_stop() const { return patience_ && stale_ >= *patience_; }
  std::size_t best_epoch() const { return best_epoch_; }
  double best_loss() const { return best_loss_; }
  const std::optional<Snapshot>& best() const { return best_; }

 private:
  std::optional<std::size_t> patience_;
  std::size_t epoch_ = 0;
  std::size_t best_epoch_ = 0;
  std::size_t stale_ = 0;
  double best_loss_ = std::numeric_limits<double>::infinity();
  std::optional<Snapshot> best_;
};

struct TrainResult {
  std::size_t epochs_run = 0;
  std::size_t best_epoch = 0;
  bool stopped_early = false;
  bool reached_target_accuracy = false;
};

/// Mini-batch Adam on softmax cross-entropy. After every epoch the
/// validation loss feeds the early stopper; on return the model holds the
/// best-validation-loss weights and the full per-epoch history. A run that
/// ends on stop_at_train_accuracy keeps the weights that hit the target.
TrainResult train(TrainedModel& model, const LabeledTensors& train_set,
                  const LabeledTensors& val_set, const TrainConfig& config,
                  const std::function<void(const EpochRecord&)>& on_epoch = {});

}  // namespace identiface
