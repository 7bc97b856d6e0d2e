#include "identiface/svm.hpp"

#include <algorithm>
#include <cmath>

#include "identiface/error.hpp"

namespace identiface {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

}  // namespace

double svm_objective(std::span<const double> w, double b, const std::vector<std::vector<double>>& x,
                     std::span<const int> signs, double lambda) {
  double hinge = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    hinge += std::max(0.0, 1.0 - signs[i] * (dot(w, x[i]) + b));
  }
  return 0.5 * lambda * (dot(w, w) + b * b) + hinge / static_cast<double>(x.size());
}

SvmModel svm_train(const std::vector<std::vector<double>>& x, std::span<const int> labels,
                   std::vector<std::string> classes, FeatureFamily family, const SvmConfig& config) {
  const std::size_t k = classes.size();
  if (k < 2) throw DegeneracyError("SVM training needs at least two classes");
  if (x.size() != labels.size()) throw DimensionError("SVM: sample and label counts differ");
  if (x.empty()) throw DegeneracyError("SVM training needs samples");
  if (!(config.lambda > 0.0)) throw ConfigError("SVM lambda must be positive");
  const std::size_t d = x.front().size();
  std::vector<std::size_t> per_class(k, 0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i].size() != d) throw DimensionError("SVM: inconsistent feature dimensions");
    for (double v : x[i]) {
      if (!std::isfinite(v)) throw NumericError("SVM: non-finite feature at sample " + std::to_string(i));
    }
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= k) {
      throw LabelError("SVM: label " + std::to_string(labels[i]) + " out of range");
    }
    ++per_class[static_cast<std::size_t>(labels[i])];
  }
  const auto present = std::count_if(per_class.begin(), per_class.end(), [](auto c) { return c > 0; });
  if (present < 2) throw DegeneracyError("SVM training data contains a single class");

  SvmModel model;
  model.classes = std::move(classes);
  model.family = family;
  model.lambda = config.lambda;
  model.weights.assign(k, std::vector<double>(d, 0.0));
  model.bias.assign(k, 0.0);

  const double n = static_cast<double>(x.size());
  const double radius = 1.0 / std::sqrt(config.lambda);
  const auto heads = static_cast<std::ptrdiff_t>(k);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t head = 0; head < heads; ++head) {
    std::vector<int> signs(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) signs[i] = labels[i] == head ? 1 : -1;

    std::vector<double> w(d, 0.0), step(d);
    double b = 0.0;
    std::vector<double> best_w = w;
    double best_b = 0.0;
    double best_obj = svm_objective(w, b, x, signs, config.lambda);

    for (std::size_t t = 1; t <= config.epochs; ++t) {
      std::fill(step.begin(), step.end(), 0.0);
      double step_b = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) {
        if (signs[i] * (dot(w, x[i]) + b) < 1.0) {
          for (std::size_t j = 0; j < d; ++j) step[j] += signs[i] * x[i][j];
          step_b += signs[i];
        }
      }
      const double eta = 1.0 / (config.lambda * static_cast<double>(t));
      const double shrink = 1.0 - 1.0 / static_cast<double>(t);
      for (std::size_t j = 0; j < d; ++j) w[j] = shrink * w[j] + eta * step[j] / n;
      b = shrink * b + eta * step_b / n;
      const double norm = std::sqrt(dot(w, w) + b * b);
      if (norm > radius) {
        const double scale = radius / norm;
        for (double& v : w) v *= scale;
        b *= scale;
      }
      const double obj = svm_objective(w, b, x, signs, config.lambda);
      if (obj < best_obj) {
        best_obj = obj;
        best_w = w;
        best_b = b;
      }
    }
    model.weights[static_cast<std::size_t>(head)] = std::move(best_w);
    model.bias[static_cast<std::size_t>(head)] = best_b;
  }
  return model;
}

SvmPrediction svm_predict(const SvmModel& model, std::span<const double> x) {
  if (x.size() != model.dim()) {
    throw DimensionError("SVM expects " + std::to_string(model.dim()) + " features, got " +
                         std::to_string(x.size()));
  }
  SvmPrediction p;
  p.scores.resize(model.weights.size());
  for (std::size_t k = 0; k < model.weights.size(); ++k) {
    p.scores[k] = dot(model.weights[k], x) + model.bias[k];
    if (p.scores[k] > p.scores[static_cast<std::size_t>(p.label)]) p.label = static_cast<int>(k);
  }
  return p;
}

}  // namespace identiface
