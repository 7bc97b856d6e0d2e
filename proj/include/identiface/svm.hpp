#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "identiface/features.hpp"

namespace identiface {

struct SvmConfig {
  double lambda = 1e-4;
  std::size_t epochs = 200;
  std::uint64_t seed = 0;
};

/// One-vs-rest linear SVM. The bias is trained as the weight of a constant
/// unit feature, so it is regularized together with w.
struct SvmModel {
  std::vector<std::string> classes;
  FeatureFamily family = FeatureFamily::landmarks_68;
  double lambda = 1e-4;
  std::vector<std::vector<double>> weights;  // [class][feature]
  std::vector<double> bias;

  std::size_t dim() const { return weights.empty() ? 0 : weights.front().size(); }
};

/// lambda/2 (|w|^2 + b^2) + mean_i max(0, 1 - y_i (w.x_i + b)), y_i in {-1, +1}.
double svm_objective(std::span<const double> w, double b, const std::vector<std::vector<double>>& x,
                     std::span<const int> signs, double lambda);

/// Full-batch Pegasos (eta_t = 1/(lambda t), projection onto the
/// 1/sqrt(lambda) ball) per class head; each head returns the iterate with
/// the lowest objective seen, never worse than the zero model.
SvmModel svm_train(const std::vector<std::vector<double>>& x, std::span<const int> labels,
                   std::vector<std::string> classes, FeatureFamily family, const SvmConfig& config);

struct SvmPrediction {
  int label = 0;
  std::vector<double> scores;
};

/// argmax_k (w_k . x + b_k); ties resolve to the lowest class index.
SvmPrediction svm_predict(const SvmModel& model, std::span<const double> x);

}  // namespace identiface
