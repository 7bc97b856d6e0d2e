#include "identiface/trainer.hpp"

#include <cmath>
#include <numeric>

#include "identiface/adam.hpp"
#include "identiface/error.hpp"

namespace identiface {

void validate_train_config(const TrainConfig& c) {
  if (!(c.lr > 0.0)) throw ConfigError("lr must be positive");
  if (c.batch_size < 1) throw ConfigError("batch_size must be at least 1");
  if (!(c.test_size > 0.0 && c.test_size < 1.0)) throw ConfigError("test_size must be in (0, 1)");
  if (c.epochs < 1) throw ConfigError("epochs must be at least 1");
  if (c.patience && *c.patience > c.epochs) throw ConfigError("patience cannot exceed epochs");
}

TrainConfig reference_train_config(Task task) {
  TrainConfig c;
  switch (task) {
    case Task::recognition:
      c.batch_size = 32;
      c.epochs = 100;
      break;
    case Task::gender:
      c.batch_size = 128;
      c.epochs = 15;
      c.patience = 3;
      break;
    case Task::face_shape:
      c.batch_size = 128;
      c.epochs = 30;
      c.patience = 7;
      break;
    case Task::emotion:
      c.batch_size = 128;
      c.epochs = 40;
      c.patience = 7;
      break;
  }
  return c;
}

TrainResult train(TrainedModel& model, const LabeledTensors& train_set,
                  const LabeledTensors& val_set, const TrainConfig& config,
                  const std::function<void(const EpochRecord&)>& on_epoch) {
  validate_train_config(config);
  if (train_set.count() == 0) throw DataError("training set is empty");
  if (val_set.count() == 0) throw DataError("validation set is empty");
  const std::size_t k = model.spec.num_classes();
  std::vector<std::size_t> per_class(k, 0);
  for (int label : train_set.labels) {
    if (label < 0 || static_cast<std::size_t>(label) >= k) {
      throw DataError("training label " + std::to_string(label) + " outside the label map");
    }
    ++per_class[static_cast<std::size_t>(label)];
  }
  for (std::size_t c = 0; c < k; ++c) {
    if (per_class[c] == 0) {
      throw DataError("class '" + model.spec.label_map[c] + "' has no training samples");
    }
  }

  Adam adam(AdamConfig{config.lr}, model.weights);
  EarlyStopper<std::vector<Tensor>> stopper(config.patience);
  TrainResult result;
  model.history.clear();

  std::size_t step = 0;
  // One optimizer step; returns (summed loss, correct predictions).
  auto run_batch = [&](const LabeledTensors& batch) {
    Tape tape;
    Rng dropout_rng(derive_seed(config.seed ^ 0xD50F0A7ULL, ++step));
    const auto pass = forward(tape, model, batch.inputs, true, dropout_rng);
    const Var loss = tape.softmax_cross_entropy(pass.logits, batch.labels);
    const double batch_loss = tape.value(loss)[0];
    if (!std::isfinite(batch_loss)) {
      throw NumericError("non-finite training loss");
    }
    tape.backward(loss);

    std::vector<Tensor> grads;
    grads.reserve(pass.params.size());
    for (const Var& p : pass.params) grads.push_back(tape.grad(p));
    adam.step(model.weights, grads);
    quantize_weights(model.weights);

    const double summed = batch_loss * static_cast<double>(batch.count());
    std::size_t hits = 0;
    const Tensor& probs = tape.probabilities(loss);
    for (std::size_t i = 0; i < batch.count(); ++i) {
      const double* row = probs.data().data() + i * k;
      const auto pred = static_cast<int>(std::max_element(row, row + k) - row);
      if (pred == batch.labels[i]) ++hits;
    }
    return std::pair{summed, hits};
  };

  std::vector<std::size_t> order(train_set.count());
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffle_rng(derive_seed(config.seed, epoch));
    shuffle_rng.shuffle(order);

    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      const std::span<const std::size_t> rows(order.data() + start, end - start);
      const auto batch = gather(train_set, rows);

      try {
        const auto [summed, hits] = run_batch(batch);
        loss_sum += summed;
        correct += hits;
      } catch (const NumericError& e) {
        throw NumericError("epoch " + std::to_string(epoch) + ": " + e.what());
      }
    }

    EpochRecord record;
    record.epoch = epoch;
    record.train_loss = loss_sum / static_cast<double>(order.size());
    record.train_accuracy = static_cast<double>(correct) / static_cast<double>(order.size());
    const EvalReport val = evaluate(model, val_set);
    record.val_loss = *val.loss;
    record.val_accuracy = val.accuracy;
    if (!std::isfinite(record.val_loss)) {
      throw NumericError("non-finite validation loss in epoch " + std::to_string(epoch));
    }
    model.history.push_back(record);
    stopper.observe(record.val_loss, model.weights);
    if (on_epoch) on_epoch(record);
    result.epochs_run = epoch;

    if (config.stop_at_train_accuracy &&
        evaluate(model, train_set).accuracy >= *config.stop_at_train_accuracy) {
      result.reached_target_accuracy = true;
      break;
    }
    if (stopper.should_stop()) {
      result.stopped_early = true;
      break;
    }
  }

  // Reaching the accuracy target keeps the current weights: that is the
  // state whose training accuracy was measured.
  if (!result.reached_target_accuracy && stopper.best()) model.weights = *stopper.best();
  result.best_epoch = stopper.best_epoch();
  return result;
}

}  // namespace identiface
