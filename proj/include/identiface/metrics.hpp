#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace identiface {

/// Rows are true labels, columns predicted labels.
using ConfusionMatrix = std::vector<std::vector<std::size_t>>;

ConfusionMatrix confusion_matrix(std::span<const int> y_true, std::span<const int> y_pred,
                                 std::size_t num_classes);

/// trace / sum. DataError when the matrix holds no samples.
double accuracy(const ConfusionMatrix& confusion);

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;

  bool operator==(const ClassMetrics&) const = default;
};

/// Zero denominators yield 0 for that metric.
std::vector<ClassMetrics> classification_report(const ConfusionMatrix& confusion);

struct EvalReport {
  ConfusionMatrix confusion;
  double accuracy = 0.0;
  std::vector<ClassMetrics> per_class;
  std::optional<double> loss;
};

EvalReport make_report(std::span<const int> y_true, std::span<const int> y_pred,
                       std::size_t num_classes);

/// Rounded integer percent, e.g. 0.953 -> 95.
int to_percent(double fraction);

/// Fixed-width classification report with integer percentages, followed by
/// an accuracy row.
std::string render_report(const EvalReport& report, std::span<const std::string> names);

std::string render_confusion(const ConfusionMatrix& confusion, std::span<const std::string> names);

/// {"accuracy", "loss", "confusion", "classes": [{"name", "precision", ...}, ...]}
nlohmann::json report_to_json(const EvalReport& report, std::span<const std::string> names);
EvalReport report_from_json(const nlohmann::json& doc, std::vector<std::string>* names = nullptr);

}  // namespace identiface
