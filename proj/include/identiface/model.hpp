#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "identiface/autodiff.hpp"
#include "identiface/dataset.hpp"
#include "identiface/metrics.hpp"
#include "identiface/tensor.hpp"

namespace identiface {

enum class LayerKind { conv2d, maxpool2d, relu, flatten, dense, dropout, softmax };

std::string_view layer_kind_name(LayerKind kind);

/// One entry of the layer plan. conv2d is always 3x3/stride 1/pad 1 and
/// maxpool2d 2x2/stride 2.
struct LayerSpec {
  LayerKind kind = LayerKind::relu;
  std::size_t in = 0;   // conv: in_channels, dense: in_dim
  std::size_t out = 0;  // conv: out_channels, dense: out_dim
  double rate = 0.0;    // dropout
};

/// VGG-16 channel layout: 2-2-3-3-3 convolutions with a pool after each block.
std::vector<std::vector<std::size_t>> reference_conv_blocks();

struct ModelSpec {
  Task task = Task::face_shape;
  std::size_t channels = 1;
  std::size_t height = 64;
  std::size_t width = 64;
  std::vector<std::vector<std::size_t>> conv_blocks = reference_conv_blocks();
  double width_multiplier = 1.0;  // scales every conv channel count, (0, 1]
  std::vector<std::size_t> dense_hidden{256};
  double dropout = 0.5;           // after each hidden dense layer
  std::vector<std::string> label_map;
  std::uint64_t init_seed = 0;

  std::size_t num_classes() const { return label_map.size(); }
};

/// Channels after applying width_multiplier (rounded, at least 1).
std::size_t scaled_channels(std::size_t channels, double multiplier);

/// Expands a spec into layers. Throws SpecError on invalid specs,
/// including spatial dims that pool down to zero.
std::vector<LayerSpec> layer_plan(const ModelSpec& spec);

/// Parameter tensor names and shapes in declaration order.
struct ParameterInfo {
  std::string name;
  Shape shape;
};
std::vector<ParameterInfo> parameter_layout(const ModelSpec& spec);

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double val_loss = 0.0;
  double val_accuracy = 0.0;
};

struct TrainedModel {
  ModelSpec spec;
  PreprocessSpec preprocess;
  std::vector<Tensor> weights;  // parameter_layout order, float32-representable
  std::vector<EpochRecord> history;
  nlohmann::json provenance = nlohmann::json::object();

  std::size_t parameter_count() const;
};

/// Allocates He-normal weights (zero biases) from spec.init_seed. The
/// preprocess spec must produce the spec's input shape.
TrainedModel build_model(const ModelSpec& spec, const PreprocessSpec& preprocess);
TrainedModel build_model(const ModelSpec& spec);

/// Rounds every weight to the nearest float32.
void quantize_weights(std::vector<Tensor>& weights);

struct ForwardPass {
  Var logits;
  std::vector<Var> params;
};

/// Records the network on `tape`. Parameters require gradients only when
/// training; dropout draws from `rng` only when training.
ForwardPass forward(Tape& tape, const TrainedModel& model, const Tensor& batch, bool training,
                    Rng& rng);

/// Inference-mode softmax probabilities for a [N, C, H, W] batch.
Tensor predict_probabilities(const TrainedModel& model, const Tensor& batch);

/// Inference-mode evaluation; the report carries the mean cross-entropy.
EvalReport evaluate(const TrainedModel& model, const LabeledTensors& data,
                    std::size_t batch_size = 64);

struct TopEntry {
  int label = 0;
  double percent = 0.0;  // probability x 100, rounded to 0.1
};

struct Prediction {
  int label = 0;
  std::vector<double> probabilities;
  std::array<TopEntry, 2> top2{};
};

/// Ranks probabilities; equal values keep the lower class index first.
Prediction rank_probabilities(std::vector<double> probabilities);

Prediction predict(const TrainedModel& model, const Image& image);
Prediction predict_tensor(const TrainedModel& model, const Tensor& chw);

}  // namespace identiface
