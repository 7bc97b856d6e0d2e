#include "identiface/metrics.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

#include "identiface/error.hpp"

namespace identiface {

ConfusionMatrix confusion_matrix(std::span<const int> y_true, std::span<const int> y_pred,
                                 std::size_t num_classes) {
  if (y_true.size() != y_pred.size()) {
    throw DataError("confusion_matrix: " + std::to_string(y_true.size()) + " true labels vs " +
                    std::to_string(y_pred.size()) + " predictions");
  }
  ConfusionMatrix m(num_classes, std::vector<std::size_t>(num_classes, 0));
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const int t = y_true[i], p = y_pred[i];
    if (t < 0 || p < 0 || static_cast<std::size_t>(t) >= num_classes ||
        static_cast<std::size_t>(p) >= num_classes) {
      throw DataError("confusion_matrix: label outside [0, " + std::to_string(num_classes) +
                      ") at sample " + std::to_string(i));
    }
    ++m[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)];
  }
  return m;
}

namespace {

void require_square(const ConfusionMatrix& m) {
  for (const auto& row : m) {
    if (row.size() != m.size()) throw DataError("confusion matrix is not square");
  }
}

}  // namespace

double accuracy(const ConfusionMatrix& m) {
  require_square(m);
  std::size_t total = 0, correct = 0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    for (std::size_t j = 0; j < m.size(); ++j) total += m[i][j];
    correct += m[i][i];
  }
  if (total == 0) throw DataError("accuracy is undefined for an empty evaluation");
  return static_cast<double>(correct) / static_cast<double>(total);
}

std::vector<ClassMetrics> classification_report(const ConfusionMatrix& m) {
  require_square(m);
  if (m.size() < 2) throw DataError("classification report needs at least two classes");
  const std::size_t k = m.size();
  std::vector<ClassMetrics> out(k);
  for (std::size_t c = 0; c < k; ++c) {
    std::size_t row = 0, col = 0;
    for (std::size_t j = 0; j < k; ++j) {
      row += m[c][j];
      col += m[j][c];
    }
    const double tp = static_cast<double>(m[c][c]);
    auto& cm = out[c];
    cm.support = row;
    cm.precision = col ? tp / static_cast<double>(col) : 0.0;
    cm.recall = row ? tp / static_cast<double>(row) : 0.0;
    const double denom = cm.precision + cm.recall;
    cm.f1 = denom > 0.0 ? 2.0 * cm.precision * cm.recall / denom : 0.0;
  }
  return out;
}

EvalReport make_report(std::span<const int> y_true, std::span<const int> y_pred,
                       std::size_t num_classes) {
  EvalReport r;
  r.confusion = confusion_matrix(y_true, y_pred, num_classes);
  r.accuracy = accuracy(r.confusion);
  r.per_class = classification_report(r.confusion);
  return r;
}

int to_percent(double fraction) { return static_cast<int>(std::lround(fraction * 100.0)); }

std::string render_report(const EvalReport& report, std::span<const std::string> names) {
  if (names.size() != report.per_class.size()) {
    throw DataError("render_report: " + std::to_string(names.size()) + " names for " +
                    std::to_string(report.per_class.size()) + " classes");
  }
  std::size_t width = 8;
  for (const auto& n : names) width = std::max(width, n.size());
  const int w = static_cast<int>(width);
  auto pct = [](double v) { return std::to_string(to_percent(v)) + "%"; };

  std::ostringstream out;
  out << std::left << std::setw(w) << "class" << std::right << std::setw(11) << "precision"
      << std::setw(8) << "recall" << std::setw(10) << "f1-score" << std::setw(9) << "support"
      << '\n';
  std::size_t total = 0;
  for (std::size_t k = 0; k < names.size(); ++k) {
    const auto& m = report.per_class[k];
    out << std::left << std::setw(w) << names[k] << std::right << std::setw(11) << pct(m.precision)
        << std::setw(8) << pct(m.recall) << std::setw(10) << pct(m.f1) << std::setw(9) << m.support
        << '\n';
    total += m.support;
  }
  out << '\n'
      << std::left << std::setw(w) << "accuracy" << std::right << std::setw(11) << "" << std::setw(8)
      << "" << std::setw(10) << pct(report.accuracy) << std::setw(9) << total << '\n';
  if (report.loss) {
    out << std::left << std::setw(w) << "loss" << std::right << std::setw(29) << std::fixed
        << std::setprecision(4) << *report.loss << '\n';
  }
  return out.str();
}

std::string render_confusion(const ConfusionMatrix& m, std::span<const std::string> names) {
  if (names.size() != m.size()) throw DataError("render_confusion: name count mismatch");
  std::size_t width = 6;
  for (const auto& n : names) width = std::max(width, n.size());
  const int w = static_cast<int>(width) + 2;
  std::ostringstream out;
  out << std::left << std::setw(w) << "true\\pred";
  for (const auto& n : names) out << std::right << std::setw(w) << n;
  out << '\n';
  for (std::size_t i = 0; i < m.size(); ++i) {
    out << std::left << std::setw(w) << names[i];
    for (std::size_t j = 0; j < m.size(); ++j) out << std::right << std::setw(w) << m[i][j];
    out << '\n';
  }
  return out.str();
}

nlohmann::json report_to_json(const EvalReport& report, std::span<const std::string> names) {
  if (names.size() != report.per_class.size()) throw DataError("report_to_json: name count mismatch");
  nlohmann::json doc;
  doc["accuracy"] = report.accuracy;
  doc["loss"] = report.loss ? nlohmann::json(*report.loss) : nlohmann::json(nullptr);
  doc["confusion"] = report.confusion;
  doc["classes"] = nlohmann::json::array();
  for (std::size_t k = 0; k < names.size(); ++k) {
    const auto& m = report.per_class[k];
    doc["classes"].push_back({{"name", names[k]},
                              {"precision", m.precision},
                              {"recall", m.recall},
                              {"f1", m.f1},
                              {"support", m.support}});
  }
  return doc;
}

EvalReport report_from_json(const nlohmann::json& doc, std::vector<std::string>* names) {
  try {
    EvalReport r;
    r.accuracy = doc.at("accuracy").get<double>();
    if (doc.contains("loss") && !doc["loss"].is_null()) r.loss = doc["loss"].get<double>();
    r.confusion = doc.at("confusion").get<ConfusionMatrix>();
    if (names) names->clear();
    for (const auto& c : doc.at("classes")) {
      r.per_class.push_back({c.at("precision").get<double>(), c.at("recall").get<double>(),
                             c.at("f1").get<double>(), c.at("support").get<std::size_t>()});
      if (names) names->push_back(c.at("name").get<std::string>());
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed report document: ") + e.what());
  }
}

}  // namespace identiface
