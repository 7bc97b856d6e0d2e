#include <doctest.h>

#include <cmath>

#include "identiface/error.hpp"
#include "identiface/trainer.hpp"
#include "model_fixtures.hpp"
#include "synthetic.hpp"

using namespace identiface;

namespace {

struct Stop {
  std::size_t stopped_after;
  std::size_t best_epoch;
  int restored;
};

// Feeds a scripted validation-loss sequence; the snapshot is the epoch number.
Stop simulate(const std::vector<double>& losses, std::optional<std::size_t> patience) {
  EarlyStopper<int> stopper(patience);
  std::size_t epoch = 0;
  for (double loss : losses) {
    ++epoch;
    stopper.observe(loss, static_cast<int>(epoch));
    if (stopper.should_stop()) break;
  }
  return {epoch, stopper.best_epoch(), *stopper.best()};
}

}  // namespace

TEST_CASE("scripted early stopping") {
  const auto s = simulate({1.0, 0.9, 0.95, 0.96, 0.97}, 2);
  CHECK(s.stopped_after == 4);
  CHECK(s.best_epoch == 2);
  CHECK(s.restored == 2);

  const auto p3 = simulate({2.0, 1.5, 1.6, 1.4, 1.45, 1.41, 1.5, 1.2}, 3);
  CHECK(p3.stopped_after == 7);
  CHECK(p3.restored == 4);

  const auto p7 = simulate({1.0, 0.8, 0.81, 0.82, 0.83, 0.84, 0.85, 0.86, 0.87, 0.1}, 7);
  CHECK(p7.stopped_after == 9);
  CHECK(p7.restored == 2);

  const auto none = simulate({1.0, 2.0, 3.0, 4.0}, std::nullopt);
  CHECK(none.stopped_after == 4);
  CHECK(none.restored == 1);

  // Equal losses do not count as improvement.
  const auto flat = simulate({1.0, 1.0, 1.0}, 2);
  CHECK(flat.stopped_after == 3);
  CHECK(flat.restored == 1);
}

TEST_CASE("reference hyperparameters") {
  const auto rec = reference_train_config(Task::recognition);
  CHECK(rec.lr == 1e-4);
  CHECK(rec.batch_size == 32);
  CHECK(rec.epochs == 100);
  CHECK_FALSE(rec.patience);
  CHECK(reference_train_config(Task::gender).patience == std::optional<std::size_t>(3));
  CHECK(reference_train_config(Task::gender).epochs == 15);
  CHECK(reference_train_config(Task::face_shape).patience == std::optional<std::size_t>(7));
  CHECK(reference_train_config(Task::face_shape).epochs == 30);
  CHECK(reference_train_config(Task::emotion).epochs == 40);
  CHECK(reference_train_config(Task::emotion).batch_size == 128);
  for (Task t : {Task::recognition, Task::gender, Task::face_shape, Task::emotion}) {
    CHECK(reference_train_config(t).test_size == 0.2);
  }
}

TEST_CASE("config validation") {
  TrainConfig c;
  c.lr = 0;
  CHECK_THROWS_AS(validate_train_config(c), ConfigError);
  c = {};
  c.batch_size = 0;
  CHECK_THROWS_AS(validate_train_config(c), ConfigError);
  c = {};
  c.test_size = 1.0;
  CHECK_THROWS_AS(validate_train_config(c), ConfigError);
  c = {};
  c.epochs = 5;
  c.patience = 6;
  CHECK_THROWS_AS(validate_train_config(c), ConfigError);
}

TEST_CASE("training runs, restores the best epoch and is reproducible") {
  const auto spec = fixtures::tiny_spec(Task::face_shape, {"oblong", "square", "round"});
  const auto train_set = synthetic::tensors(3, 6, 16, 1);
  const auto val_set = synthetic::tensors(3, 3, 16, 2);
  TrainConfig cfg;
  cfg.lr = 1e-3;
  cfg.batch_size = 4;
  cfg.epochs = 6;
  cfg.seed = 5;

  TrainedModel a = build_model(spec, fixtures::tiny_preprocess());
  std::size_t callbacks = 0;
  const auto r = train(a, train_set, val_set, cfg, [&](const EpochRecord&) { ++callbacks; });
  CHECK(r.epochs_run == 6);
  CHECK(callbacks == 6);
  CHECK(a.history.size() == 6);
  CHECK_FALSE(r.stopped_early);
  double best = 1e300;
  for (const auto& e : a.history) best = std::min(best, e.val_loss);
  CHECK(a.history[r.best_epoch - 1].val_loss == best);
  CHECK(*evaluate(a, val_set).loss == doctest::Approx(best).epsilon(1e-12));

  TrainedModel b = build_model(spec, fixtures::tiny_preprocess());
  train(b, train_set, val_set, cfg);
  CHECK(a.weights == b.weights);
}

TEST_CASE("training error contract") {
  const auto spec = fixtures::tiny_spec(Task::face_shape, {"oblong", "square", "round"});
  TrainedModel m = build_model(spec, fixtures::tiny_preprocess());
  auto two_classes = synthetic::tensors(2, 3, 16, 1);
  const auto val = synthetic::tensors(3, 1, 16, 2);
  TrainConfig cfg;
  cfg.epochs = 1;
  CHECK_THROWS_AS(train(m, two_classes, val, cfg), DataError);

  auto nan_set = synthetic::tensors(3, 2, 16, 1);
  for (auto& w : m.weights[0].data()) w = 1e300;
  nan_set.inputs.fill(1e300);
  try {
    train(m, nan_set, val, cfg);
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("epoch 1") != std::string::npos);
  }
}
