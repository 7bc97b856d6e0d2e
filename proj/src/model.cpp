#include "identiface/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "identiface/error.hpp"

namespace identiface {

std::string_view layer_kind_name(LayerKind kind) {
  switch (kind) {
    case LayerKind::conv2d: return "conv2d";
    case LayerKind::maxpool2d: return "maxpool2d";
    case LayerKind::relu: return "relu";
    case LayerKind::flatten: return "flatten";
    case LayerKind::dense: return "dense";
    case LayerKind::dropout: return "dropout";
    case LayerKind::softmax: return "softmax";
  }
  return "unknown";
}

std::vector<std::vector<std::size_t>> reference_conv_blocks() {
  return {{64, 64}, {128, 128}, {256, 256, 256}, {512, 512, 512}, {512, 512, 512}};
}

std::size_t scaled_channels(std::size_t channels, double multiplier) {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(channels * multiplier)));
}

std::vector<LayerSpec> layer_plan(const ModelSpec& spec) {
  if (spec.label_map.size() < 2) throw SpecError("model needs at least two output classes");
  if (spec.channels == 0 || spec.height == 0 || spec.width == 0) {
    throw SpecError("model input dims must be positive");
  }
  if (!(spec.width_multiplier > 0.0 && spec.width_multiplier <= 1.0)) {
    throw SpecError("width_multiplier must be in (0, 1]");
  }
  if (!(spec.dropout >= 0.0 && spec.dropout < 1.0)) throw SpecError("dropout rate must be in [0, 1)");

  std::vector<LayerSpec> layers;
  std::size_t channels = spec.channels, h = spec.height, w = spec.width;
  for (std::size_t b = 0; b < spec.conv_blocks.size(); ++b) {
    if (spec.conv_blocks[b].empty()) throw SpecError("conv block " + std::to_string(b + 1) + " is empty");
    for (std::size_t c : spec.conv_blocks[b]) {
      if (c == 0) throw SpecError("conv channel counts must be positive");
      const std::size_t out = scaled_channels(c, spec.width_multiplier);
      layers.push_back({LayerKind::conv2d, channels, out, 0.0});
      layers.push_back({LayerKind::relu});
      channels = out;
    }
    if (h < 2 || w < 2) {
      throw SpecError("pool after block " + std::to_string(b + 1) + " underflows spatial dims " +
                      std::to_string(h) + "x" + std::to_string(w));
    }
    layers.push_back({LayerKind::maxpool2d, channels, channels, 0.0});
    h /= 2;
    w /= 2;
  }
  layers.push_back({LayerKind::flatten});
  std::size_t features = channels * h * w;
  for (std::size_t hidden : spec.dense_hidden) {
    if (hidden == 0) throw SpecError("dense hidden sizes must be positive");
    layers.push_back({LayerKind::dense, features, hidden, 0.0});
    layers.push_back({LayerKind::relu});
    layers.push_back({LayerKind::dropout, 0, 0, spec.dropout});
    features = hidden;
  }
  layers.push_back({LayerKind::dense, features, spec.label_map.size(), 0.0});
  layers.push_back({LayerKind::softmax});
  return layers;
}

std::vector<ParameterInfo> parameter_layout(const ModelSpec& spec) {
  std::vector<ParameterInfo> out;
  const auto layers = layer_plan(spec);
  std::size_t block = 1, conv_in_block = 0, dense_index = 0;
  const std::size_t dense_total =
      static_cast<std::size_t>(std::count_if(layers.begin(), layers.end(),
                                             [](const auto& l) { return l.kind == LayerKind::dense; }));
  for (const auto& l : layers) {
    if (l.kind == LayerKind::conv2d) {
      const std::string name = "conv" + std::to_string(block) + "_" + std::to_string(++conv_in_block);
      out.push_back({name + ".weight", {l.out, l.in, 3, 3}});
      out.push_back({name + ".bias", {l.out}});
    } else if (l.kind == LayerKind::maxpool2d) {
      ++block;
      conv_in_block = 0;
    } else if (l.kind == LayerKind::dense) {
      ++dense_index;
      const std::string name =
          dense_index == dense_total ? std::string("output") : "dense" + std::to_string(dense_index);
      out.push_back({name + ".weight", {l.in, l.out}});
      out.push_back({name + ".bias", {l.out}});
    }
  }
  return out;
}

std::size_t TrainedModel::parameter_count() const {
  return std::accumulate(weights.begin(), weights.end(), std::size_t{0},
                         [](std::size_t acc, const Tensor& t) { return acc + t.size(); });
}

void quantize_weights(std::vector<Tensor>& weights) {
  for (auto& t : weights) {
    for (double& v : t.data()) v = static_cast<double>(static_cast<float>(v));
  }
}

TrainedModel build_model(const ModelSpec& spec, const PreprocessSpec& preprocess) {
  validate_preprocess(preprocess);
  if (preprocess.channels() != spec.channels || preprocess.height != spec.height ||
      preprocess.width != spec.width) {
    throw SpecError("preprocess output does not match the model input shape");
  }
  TrainedModel model;
  model.spec = spec;
  model.preprocess = preprocess;
  Rng rng(spec.init_seed);
  for (const auto& p : parameter_layout(spec)) {
    Tensor t(p.shape, 0.0);
    if (p.shape.size() > 1) {
      const std::size_t fan_in = p.shape.size() == 4 ? p.shape[1] * 9 : p.shape[0];
      const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
      for (double& v : t.data()) v = stddev * rng.normal();
    }
    model.weights.push_back(std::move(t));
  }
  quantize_weights(model.weights);
  return model;
}

TrainedModel build_model(const ModelSpec& spec) {
  PreprocessSpec pre;
  pre.height = spec.height;
  pre.width = spec.width;
  pre.color = spec.channels == 3 ? ColorMode::rgb : ColorMode::grayscale;
  if (spec.channels != 1 && spec.channels != 3) throw SpecError("model input needs 1 or 3 channels");
  return build_model(spec, pre);
}

ForwardPass forward(Tape& tape, const TrainedModel& model, const Tensor& batch, bool training,
                    Rng& rng) {
  const auto& spec = model.spec;
  if (batch.rank() != 4 || batch.dim(1) != spec.channels || batch.dim(2) != spec.height ||
      batch.dim(3) != spec.width) {
    throw DimensionError("model expects [N," + std::to_string(spec.channels) + "," +
                         std::to_string(spec.height) + "," + std::to_string(spec.width) +
                         "] input, got " + shape_to_string(batch.shape()));
  }
  ForwardPass pass;
  for (const auto& w : model.weights) pass.params.push_back(tape.leaf(w, training));
  Var x = tape.leaf(batch);
  std::size_t p = 0;
  for (const auto& layer : layer_plan(spec)) {
    switch (layer.kind) {
      case LayerKind::conv2d:
        x = tape.conv2d(x, pass.params[p], pass.params[p + 1]);
        p += 2;
        break;
      case LayerKind::dense:
        x = tape.dense(x, pass.params[p], pass.params[p + 1]);
        p += 2;
        break;
      case LayerKind::maxpool2d: x = tape.maxpool2d(x); break;
      case LayerKind::relu: x = tape.relu(x); break;
      case LayerKind::flatten: x = tape.flatten(x); break;
      case LayerKind::dropout: x = tape.dropout(x, layer.rate, training, rng); break;
      case LayerKind::softmax: break;  // fused into the loss / applied at inference
    }
  }
  pass.logits = x;
  return pass;
}

Tensor predict_probabilities(const TrainedModel& model, const Tensor& batch) {
  Tape tape;
  Rng unused(0);
  const auto pass = forward(tape, model, batch, false, unused);
  return softmax(tape.value(pass.logits));
}

EvalReport evaluate(const TrainedModel& model, const LabeledTensors& data, std::size_t batch_size) {
  const std::size_t k = model.spec.num_classes();
  if (data.count() == 0) throw DataError("evaluation set is empty");
  for (int label : data.labels) {
    if (label < 0 || static_cast<std::size_t>(label) >= k) {
      throw DataError("label " + std::to_string(label) + " is outside the model's label map");
    }
  }
  std::vector<int> predicted;
  predicted.reserve(data.count());
  double loss = 0.0;
  for (std::size_t start = 0; start < data.count(); start += batch_size) {
    const std::size_t end = std::min(data.count(), start + batch_size);
    std::vector<std::size_t> rows(end - start);
    std::iota(rows.begin(), rows.end(), start);
    const auto batch = gather(data, rows);
    const Tensor probs = predict_probabilities(model, batch.inputs);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const double* row = probs.data().data() + i * k;
      predicted.push_back(static_cast<int>(std::max_element(row, row + k) - row));
      loss -= std::log(std::max(row[batch.labels[i]], 1e-300));
    }
  }
  EvalReport report = make_report(data.labels, predicted, k);
  report.loss = loss / static_cast<double>(data.count());
  return report;
}

Prediction rank_probabilities(std::vector<double> probabilities) {
  if (probabilities.size() < 2) throw DataError("ranking needs at least two probabilities");
  std::vector<int> order(probabilities.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return probabilities[a] > probabilities[b]; });
  Prediction p;
  p.label = order[0];
  for (std::size_t i = 0; i < 2; ++i) {
    p.top2[i] = {order[i], std::round(probabilities[order[i]] * 1000.0) / 10.0};
  }
  p.probabilities = std::move(probabilities);
  return p;
}

Prediction predict_tensor(const TrainedModel& model, const Tensor& chw) {
  require_rank(chw, 3, "predict input");
  const Tensor batch = chw.reshaped({1, chw.dim(0), chw.dim(1), chw.dim(2)});
  const Tensor probs = predict_probabilities(model, batch);
  return rank_probabilities(std::vector<double>(probs.data().begin(), probs.data().end()));
}

Prediction predict(const TrainedModel& model, const Image& image) {
  return predict_tensor(model, preprocess(image, model.preprocess));
}

}  // namespace identiface
