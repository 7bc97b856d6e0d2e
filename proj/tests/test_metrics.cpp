#include <doctest.h>

#include "identiface/error.hpp"
#include "identiface/metrics.hpp"
#include "identiface/rng.hpp"

using namespace identiface;

TEST_CASE("confusion matrix and accuracy") {
  const std::vector<int> t{0, 0, 1, 1}, p{0, 1, 1, 1};
  const auto c = confusion_matrix(t, p, 2);
  CHECK(c == ConfusionMatrix{{1, 1}, {0, 2}});
  CHECK(accuracy(c) == 0.75);
  const auto d = confusion_matrix(t, t, 2);
  CHECK(d == ConfusionMatrix{{2, 0}, {0, 2}});
  CHECK(accuracy(d) == 1.0);
  CHECK_THROWS_AS(accuracy(confusion_matrix({}, {}, 2)), DataError);
  const std::vector<int> shorter{0};
  CHECK_THROWS_AS(confusion_matrix(t, shorter, 2), DataError);
  const std::vector<int> big{0, 0, 2, 1};
  CHECK_THROWS_AS(confusion_matrix(t, big, 2), DataError);
}

TEST_CASE("classification report on the worked example") {
  const auto r = classification_report({{1, 1}, {0, 2}});
  CHECK(r[0].precision == 1.0);
  CHECK(r[0].recall == 0.5);
  CHECK(r[0].f1 == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(r[1].precision == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(r[1].recall == 1.0);
  CHECK(r[1].f1 == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(r[0].support == 2);

  const auto perfect = classification_report({{3, 0}, {0, 4}});
  for (const auto& m : perfect) {
    CHECK(m.precision == 1.0);
    CHECK(m.recall == 1.0);
    CHECK(m.f1 == 1.0);
  }
  const auto zero_col = classification_report({{2, 0}, {3, 0}});
  CHECK(zero_col[1].precision == 0.0);
  CHECK(zero_col[1].f1 == 0.0);
}

TEST_CASE("rendering") {
  CHECK(to_percent(0.953) == 95);
  CHECK(to_percent(0.955) == 96);
  const std::vector<std::string> names{"female", "male"};
  const std::vector<int> y{0, 1, 1};
  const auto report = make_report(y, y, 2);
  const std::string text = render_report(report, names);
  CHECK(text.find("100%") != std::string::npos);
  CHECK(text.find("accuracy") != std::string::npos);
  CHECK(text == render_report(report, names));
  CHECK(text.find('.') == std::string::npos);

  EvalReport r2 = report;
  r2.per_class[0].precision = 0.953;
  CHECK(render_report(r2, names).find("95%") != std::string::npos);
  const std::vector<std::string> three{"a", "b", "c"};
  CHECK_THROWS_AS(render_report(report, three), DataError);
  CHECK(render_confusion(report.confusion, names).find("female") != std::string::npos);
}

TEST_CASE("json export round trip") {
  const std::vector<int> t{0, 1, 2, 2, 1}, p{0, 2, 2, 1, 1};
  auto report = make_report(t, p, 3);
  report.loss = 0.25;
  const std::vector<std::string> names{"a", "b", "c"};
  const auto doc = report_to_json(report, names);
  CHECK(doc["classes"].size() == 3);
  CHECK(doc["classes"][1]["name"] == "b");
  std::vector<std::string> back_names;
  const auto back = report_from_json(doc, &back_names);
  CHECK(back_names == names);
  CHECK(back.confusion == report.confusion);
  CHECK(back.per_class == report.per_class);
  CHECK(back.loss == report.loss);
}

TEST_CASE("random sets against a brute-force counter") {
  Rng rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t k = 2 + rng.uniform_index(5);
    const std::size_t n = 1 + rng.uniform_index(60);
    std::vector<int> t(n), p(n);
    for (std::size_t i = 0; i < n; ++i) {
      t[i] = static_cast<int>(rng.uniform_index(k));
      p[i] = static_cast<int>(rng.uniform_index(k));
    }
    const auto r = make_report(t, p, k);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < n; ++i) correct += t[i] == p[i];
    CHECK(r.accuracy == static_cast<double>(correct) / static_cast<double>(n));
    double weighted_recall = 0;
    for (std::size_t c = 0; c < k; ++c) {
      std::size_t tp = 0, pred = 0, actual = 0;
      for (std::size_t i = 0; i < n; ++i) {
        tp += t[i] == static_cast<int>(c) && p[i] == static_cast<int>(c);
        pred += p[i] == static_cast<int>(c);
        actual += t[i] == static_cast<int>(c);
      }
      CHECK(r.per_class[c].support == actual);
      const double prec = pred ? static_cast<double>(tp) / static_cast<double>(pred) : 0.0;
      const double rec = actual ? static_cast<double>(tp) / static_cast<double>(actual) : 0.0;
      CHECK(r.per_class[c].precision == prec);
      CHECK(r.per_class[c].recall == rec);
      weighted_recall += rec * static_cast<double>(actual);
    }
    CHECK(r.accuracy == doctest::Approx(weighted_recall / static_cast<double>(n)).epsilon(1e-12));
  }
}
