#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "identiface/error.hpp"
#include "identiface/model_io.hpp"
#include "model_fixtures.hpp"
#include "oracles.hpp"

using namespace identiface;

namespace {

const std::vector<std::string> kShapes{"oblong", "square", "round", "heart", "oval"};

}  // namespace

TEST_CASE("reference layer plan") {
  ModelSpec spec;
  spec.height = spec.width = 48;
  spec.label_map = kShapes;
  const auto layers = layer_plan(spec);
  std::size_t convs = 0, pools = 0;
  for (const auto& l : layers) {
    convs += l.kind == LayerKind::conv2d;
    pools += l.kind == LayerKind::maxpool2d;
  }
  CHECK(convs == 13);
  CHECK(pools == 5);
  const auto layout = parameter_layout(spec);
  // 48 -> 24 -> 12 -> 6 -> 3 -> 1, so the first dense layer sees 512 inputs.
  CHECK(layout[26].name == "dense1.weight");
  CHECK(layout[26].shape == Shape{512, 256});
  CHECK(layout.back().name == "output.bias");
  CHECK(layout[layout.size() - 2].shape == Shape{256, 5});
  CHECK(layout[0].name == "conv1_1.weight");
  CHECK(layout[0].shape == Shape{64, 1, 3, 3});
}

TEST_CASE("width multiplier and spec errors") {
  ModelSpec spec;
  spec.label_map = kShapes;
  spec.width_multiplier = 0.125;
  CHECK(parameter_layout(spec)[0].shape == Shape{8, 1, 3, 3});
  CHECK(scaled_channels(3, 0.125) == 1);

  ModelSpec tiny = spec;
  tiny.height = tiny.width = 16;
  CHECK_THROWS_AS(layer_plan(tiny), SpecError);
  ModelSpec one_class = spec;
  one_class.label_map = {"x"};
  CHECK_THROWS_AS(layer_plan(one_class), SpecError);
  ModelSpec wide = spec;
  wide.width_multiplier = 1.5;
  CHECK_THROWS_AS(layer_plan(wide), SpecError);
}

TEST_CASE("builds are reproducible") {
  const auto spec = fixtures::tiny_spec(Task::face_shape, kShapes);
  const auto a = build_model(spec, fixtures::tiny_preprocess());
  const auto b = build_model(spec, fixtures::tiny_preprocess());
  CHECK(a.weights == b.weights);
  CHECK(a.parameter_count() == 8 * 9 + 8 + 8 * 8 * 9 + 8 + 8 * 16 * 16 + 16 + 16 * 5 + 5);
  auto other = spec;
  other.init_seed = 4;
  CHECK(build_model(other, fixtures::tiny_preprocess()).weights != a.weights);
  for (const auto& t : a.weights)
    for (double v : t.data()) CHECK(static_cast<double>(static_cast<float>(v)) == v);
  CHECK_THROWS_AS(build_model(spec, fixtures::tiny_preprocess(20)), SpecError);
}

TEST_CASE("ranking probabilities") {
  const auto p = rank_probabilities({0.50, 0.30, 0.10, 0.05, 0.05});
  CHECK(p.label == 0);
  CHECK(p.top2[0].label == 0);
  CHECK(p.top2[0].percent == 50.0);
  CHECK(p.top2[1].label == 1);
  CHECK(p.top2[1].percent == 30.0);
  const auto tie = rank_probabilities({0.1, 0.45, 0.45});
  CHECK(tie.top2[0].label == 1);
  CHECK(tie.top2[1].label == 2);
  CHECK(rank_probabilities({0.12345, 0.87655}).top2[1].percent == 12.3);
}

TEST_CASE("predict returns a distribution") {
  const auto model = build_model(fixtures::tiny_spec(Task::emotion, {"neutral", "happy", "angry", "surprise", "sad"}),
                                 fixtures::tiny_preprocess());
  Image img(30, 20, 3);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) img.pixels[i] = static_cast<double>((i * 7) % 256);
  const auto p = predict(model, img);
  double s = 0;
  for (double v : p.probabilities) s += v;
  CHECK(std::abs(s - 1.0) < 1e-6);
  CHECK(p.probabilities.size() == 5);
  CHECK(p.top2[0].percent >= p.top2[1].percent);
  const auto again = predict(model, img);
  CHECK(again.probabilities == p.probabilities);
}

TEST_CASE("evaluate") {
  auto model = build_model(fixtures::tiny_spec(Task::face_shape, kShapes), fixtures::tiny_preprocess());
  // Zero every weight and favour class 0 through the output bias.
  for (auto& t : model.weights) t.fill(0.0);
  model.weights.back()[0] = 1.0;
  LabeledTensors data;
  data.inputs = oracle::random_tensor({10, 1, 16, 16}, 1, 0, 1);
  data.labels = {0, 1, 2, 3, 4, 0, 1, 2, 3, 4};
  const auto report = evaluate(model, data, 3);
  CHECK(report.accuracy == doctest::Approx(0.2));
  CHECK(report.per_class.size() == 5);
  std::size_t trace = 0, total = 0;
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 5; ++j) {
      total += report.confusion[i][j];
      if (i == j) trace += report.confusion[i][j];
    }
  CHECK(report.accuracy == static_cast<double>(trace) / static_cast<double>(total));
  REQUIRE(report.loss);
  const double p0 = std::exp(1.0) / (std::exp(1.0) + 4.0);
  const double p1 = 1.0 / (std::exp(1.0) + 4.0);
  CHECK(*report.loss == doctest::Approx(-(2 * std::log(p0) + 8 * std::log(p1)) / 10).epsilon(1e-9));

  data.labels[3] = 7;
  CHECK_THROWS_AS(evaluate(model, data), DataError);
  CHECK_THROWS_AS(evaluate(model, LabeledTensors{}), DataError);
}

TEST_CASE("model files round trip byte for byte") {
  auto model = build_model(fixtures::tiny_spec(Task::gender, {"female", "male"}), fixtures::tiny_preprocess());
  model.history.push_back({1, 0.5, 0.75, 0.6, 0.7});
  model.provenance = {{"seed", 9}};
  const auto bytes = serialize_model(model);
  CHECK(model_kind(bytes) == "cnn");
  const TrainedModel back = deserialize_model(bytes);
  CHECK(back.weights == model.weights);
  CHECK(back.spec.label_map == model.spec.label_map);
  CHECK(back.preprocess == model.preprocess);
  CHECK(back.history.size() == 1);
  CHECK(back.history[0].val_accuracy == 0.7);
  CHECK(serialize_model(back) == bytes);
  CHECK(model_version(bytes).size() == 16);

  const auto path = std::filesystem::temp_directory_path() / "identiface_test_model.idfc";
  save_model(model, path);
  CHECK(load_model(path).weights == model.weights);
  std::filesystem::remove(path);
}

TEST_CASE("svm files round trip") {
  SvmModel m;
  m.classes = {"neutral", "happy", "angry"};
  m.family = FeatureFamily::landmarks_68;
  m.lambda = 1e-3;
  for (std::uint64_t k = 0; k < 3; ++k) {
    const Tensor row = oracle::random_tensor({136}, k);
    m.weights.emplace_back(row.data().begin(), row.data().end());
    for (double& v : m.weights.back()) v = static_cast<float>(v);
  }
  m.bias = {0.5, 0.0, -1.0};
  const auto bytes = serialize_svm(m);
  CHECK(model_kind(bytes) == "svm");
  const SvmModel back = deserialize_svm(bytes);
  CHECK(back.weights == m.weights);
  CHECK(back.classes == m.classes);
  CHECK(serialize_svm(back) == bytes);
  CHECK_THROWS_AS(deserialize_model(bytes), FormatError);
  SvmModel wrong = m;
  wrong.family = FeatureFamily::lbp;
  CHECK_THROWS_AS(serialize_svm(wrong), SpecError);
}

TEST_CASE("malformed model files") {
  const auto model = build_model(fixtures::tiny_spec(Task::face_shape, {"oblong", "square", "round", "heart"}),
                                 fixtures::tiny_preprocess());
  const auto bytes = serialize_model(model);

  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  CHECK_THROWS_AS(deserialize_model(bad_magic), FormatError);

  auto bad_version = bytes;
  bad_version[4] = 9;
  CHECK_THROWS_AS(deserialize_model(bad_version), FormatError);

  const std::vector<std::uint8_t> truncated(bytes.begin(), bytes.end() - 5);
  CHECK_THROWS_AS(deserialize_model(truncated), FormatError);
  auto trailing = bytes;
  trailing.push_back(0);
  CHECK_THROWS_AS(deserialize_model(trailing), FormatError);
  const std::vector<std::uint8_t> stub(bytes.begin(), bytes.begin() + 20);
  CHECK_THROWS_AS(deserialize_model(stub), FormatError);

  // Header claims 5 classes while the output weights have 4 columns.
  const auto five = fixtures::edit_header(bytes, [](nlohmann::json& h) {
    h["label_map"] = {"oblong", "square", "round", "heart", "oval"};
  });
  try {
    deserialize_model(five);
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find("output.weight") != std::string::npos);
  }

  const auto no_kind = fixtures::edit_header(bytes, [](nlohmann::json& h) { h.erase("kind"); });
  CHECK_THROWS_AS(deserialize_model(no_kind), FormatError);
  const auto num_kind = fixtures::edit_header(bytes, [](nlohmann::json& h) { h["kind"] = 3; });
  CHECK_THROWS_AS(deserialize_model(num_kind), FormatError);
  const auto bad_task = fixtures::edit_header(bytes, [](nlohmann::json& h) { h["spec"]["task"] = "age"; });
  CHECK_THROWS_AS(deserialize_model(bad_task), FormatError);

  auto nan_weight = bytes;
  const std::uint32_t nan_bits = 0x7FC00000u;
  for (int i = 0; i < 4; ++i) nan_weight[nan_weight.size() - 4 + static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(nan_bits >> (8 * i));
  CHECK_THROWS_AS(deserialize_model(nan_weight), FormatError);
  CHECK_THROWS_AS(load_model("/nonexistent/model.idfc"), FormatError);
}
