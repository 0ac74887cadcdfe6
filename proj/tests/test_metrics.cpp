#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "chainlens/error.hpp"
#include "chainlens/metrics.hpp"
#include "chainlens/rng.hpp"
#include "chainlens/tx.hpp"

using namespace chainlens;

namespace {

// Brute-force confusion-count oracle: recompute every metric from scratch.
struct OracleMetrics {
  std::array<double, 4> precision{}, recall{}, f1{};
  std::array<long, 4> support{};
  double weighted_precision = 0, weighted_recall = 0, weighted_f1 = 0, macro_f1 = 0;
};

OracleMetrics oracle_metrics(const std::vector<int>& predicted, const std::vector<int>& truth) {
  OracleMetrics m;
  for (int c = 0; c < 4; ++c) {
    long tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      if (truth[i] == c && predicted[i] == c) ++tp;
      if (truth[i] != c && predicted[i] == c) ++fp;
      if (truth[i] == c && predicted[i] != c) ++fn;
    }
    const std::size_t uc = static_cast<std::size_t>(c);
    m.support[uc] = tp + fn;
    m.precision[uc] = (tp + fp) ? double(tp) / double(tp + fp) : 0.0;
    m.recall[uc] = (tp + fn) ? double(tp) / double(tp + fn) : 0.0;
    m.f1[uc] = (m.precision[uc] + m.recall[uc]) > 0
                   ? 2 * m.precision[uc] * m.recall[uc] / (m.precision[uc] + m.recall[uc])
                   : 0.0;
    m.weighted_precision += double(m.support[uc]) * m.precision[uc];
    m.weighted_recall += double(m.support[uc]) * m.recall[uc];
    m.weighted_f1 += double(m.support[uc]) * m.f1[uc];
    m.macro_f1 += m.f1[uc];
  }
  m.weighted_precision /= double(truth.size());
  m.weighted_recall /= double(truth.size());
  m.weighted_f1 /= double(truth.size());
  m.macro_f1 /= 4.0;
  return m;
}

}  // namespace

TEST_CASE("perfect predictions score 1 everywhere") {
  std::vector<int> truth = {0, 1, 2, 3, 0, 1, 2, 3};
  MetricsReport r = evaluate(truth, truth);
  for (const ClassMetrics& m : r.per_class) {
    REQUIRE(m.precision == 1.0);
    REQUIRE(m.recall == 1.0);
    REQUIRE(m.f1 == 1.0);
    REQUIRE(m.support == 2);
  }
  REQUIRE(r.weighted_precision == 1.0);
  REQUIRE(r.weighted_recall == 1.0);
  REQUIRE(r.weighted_f1 == 1.0);
  REQUIRE(r.macro_f1 == 1.0);
  REQUIRE(r.total == 8);
  for (int t = 0; t < 4; ++t)
    for (int p = 0; p < 4; ++p)
      REQUIRE(r.confusion[std::size_t(t)][std::size_t(p)] == (t == p ? 2 : 0));
}

TEST_CASE("tp=8 fp=2 fn=2 gives precision=recall=f1=0.8") {
  // Class 0: 8 correct, 2 other-class samples predicted as 0, 2 true-0 predicted elsewhere.
  std::vector<int> truth, predicted;
  for (int i = 0; i < 8; ++i) {
    truth.push_back(0);
    predicted.push_back(0);
  }
  truth.push_back(1);
  predicted.push_back(0);
  truth.push_back(2);
  predicted.push_back(0);
  truth.push_back(0);
  predicted.push_back(1);
  truth.push_back(0);
  predicted.push_back(3);
  // Pad class 3 so every class appears in truth at least once via class 2/3 rows.
  truth.push_back(3);
  predicted.push_back(3);

  MetricsReport r = evaluate(predicted, truth);
  REQUIRE(r.per_class[0].precision == Catch::Approx(0.8).margin(1e-15));
  REQUIRE(r.per_class[0].recall == Catch::Approx(0.8).margin(1e-15));
  REQUIRE(r.per_class[0].f1 == Catch::Approx(0.8).margin(1e-15));
  REQUIRE(r.per_class[0].support == 10);
}

TEST_CASE("f1 is zero when precision and recall are both zero") {
  // Class 2 never predicted and never correct.
  std::vector<int> truth = {2, 2, 0, 1, 3};
  std::vector<int> predicted = {0, 1, 0, 1, 3};
  MetricsReport r = evaluate(predicted, truth);
  REQUIRE(r.per_class[2].precision == 0.0);
  REQUIRE(r.per_class[2].recall == 0.0);
  REQUIRE(r.per_class[2].f1 == 0.0);
}

TEST_CASE("random prediction batches match the counting oracle") {
  Rng rng(910);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 1 + static_cast<int>(rng.uniform_int(0, 999));
    std::vector<int> truth(static_cast<std::size_t>(n)), predicted(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      truth[std::size_t(i)] = static_cast<int>(rng.uniform_int(0, 3));
      predicted[std::size_t(i)] = static_cast<int>(rng.uniform_int(0, 3));
    }
    MetricsReport r = evaluate(predicted, truth);
    OracleMetrics o = oracle_metrics(predicted, truth);
    for (int c = 0; c < 4; ++c) {
      const std::size_t uc = static_cast<std::size_t>(c);
      REQUIRE(r.per_class[uc].precision == Catch::Approx(o.precision[uc]).margin(1e-12));
      REQUIRE(r.per_class[uc].recall == Catch::Approx(o.recall[uc]).margin(1e-12));
      REQUIRE(r.per_class[uc].f1 == Catch::Approx(o.f1[uc]).margin(1e-12));
      REQUIRE(r.per_class[uc].support == o.support[uc]);
    }
    REQUIRE(r.weighted_precision == Catch::Approx(o.weighted_precision).margin(1e-12));
    REQUIRE(r.weighted_recall == Catch::Approx(o.weighted_recall).margin(1e-12));
    REQUIRE(r.weighted_f1 == Catch::Approx(o.weighted_f1).margin(1e-12));
    REQUIRE(r.macro_f1 == Catch::Approx(o.macro_f1).margin(1e-12));

    // Weighted F1 identity and confusion bookkeeping.
    double num = 0.0;
    long support_sum = 0, confusion_sum = 0;
    for (int c = 0; c < 4; ++c) {
      const std::size_t uc = static_cast<std::size_t>(c);
      num += double(r.per_class[uc].support) * r.per_class[uc].f1;
      support_sum += r.per_class[uc].support;
      long row = 0;
      for (int p = 0; p < 4; ++p) row += r.confusion[uc][std::size_t(p)];
      REQUIRE(row == r.per_class[uc].support);
      confusion_sum += row;
    }
    REQUIRE(support_sum == r.total);
    REQUIRE(confusion_sum == r.total);
    REQUIRE(r.weighted_f1 == Catch::Approx(num / double(support_sum)).margin(1e-12));
  }
}

TEST_CASE("evaluate rejects malformed input") {
  try {
    evaluate({0, 1}, {0});
    FAIL("expected input error");
  } catch (const Error& e) {
    REQUIRE(e.code() == Errc::input);
  }
  try {
    evaluate({}, {});
    FAIL("expected input error");
  } catch (const Error& e) {
    REQUIRE(e.code() == Errc::input);
  }
  try {
    evaluate({4}, {0});
    FAIL("expected bad_index");
  } catch (const Error& e) {
    REQUIRE(e.code() == Errc::bad_index);
  }
  try {
    evaluate({0}, {-1});
    FAIL("expected bad_index");
  } catch (const Error& e) {
    REQUIRE(e.code() == Errc::bad_index);
  }
}

TEST_CASE("metrics formatting is stable and fully keyed") {
  std::vector<int> truth = {0, 0, 1, 2, 3};
  std::vector<int> predicted = {0, 1, 1, 2, 3};
  MetricsReport r = evaluate(predicted, truth);
  const std::string text = format_metrics(r);
  REQUIRE(text == format_metrics(r));

  REQUIRE(text.find("class exchange precision 1.000000 recall 0.500000 f1 0.666667 support 2\n") !=
          std::string::npos);
  REQUIRE(text.find("class mining precision 0.500000 recall 1.000000 f1 0.666667 support 1\n") !=
          std::string::npos);
  REQUIRE(text.find("class gambling precision 1.000000 recall 1.000000 f1 1.000000 support 1\n") !=
          std::string::npos);
  REQUIRE(text.find("class service precision 1.000000 recall 1.000000 f1 1.000000 support 1\n") !=
          std::string::npos);
  REQUIRE(text.find("weighted_avg precision ") != std::string::npos);
  REQUIRE(text.find("macro_f1 ") != std::string::npos);
  REQUIRE(text.find("total 5\n") != std::string::npos);
  REQUIRE(text.find("confusion\n1 1 0 0\n0 1 0 0\n0 0 1 0\n0 0 0 1\n") != std::string::npos);
}

TEST_CASE("timing report reproduces the published per-stage arithmetic") {
  // Published per-address stage means: 0.19 + 0.63 + 2.71 + 0.81 = 4.34 seconds,
  // with multi-tx compression at 62.44% of the total.
  std::vector<std::array<double, 4>> samples = {{0.19, 0.63, 2.71, 0.81}};
  TimingReport r = timing_report(samples);
  REQUIRE(r.address_count == 1);
  REQUIRE(r.total_seconds == Catch::Approx(4.34).margin(1e-12));
  REQUIRE(r.stage_seconds[2] == Catch::Approx(2.71).margin(1e-12));
  REQUIRE(r.ratio_percent[2] == Catch::Approx(62.44).margin(0.005));

  const std::string text = format_timing(r);
  REQUIRE(text.find("addresses 1\n") != std::string::npos);
  REQUIRE(text.find("original_extraction seconds 0.19 ratio 4.38%\n") != std::string::npos);
  REQUIRE(text.find("single_tx_compression seconds 0.63 ratio 14.52%\n") != std::string::npos);
  REQUIRE(text.find("multi_tx_compression seconds 2.71 ratio 62.44%\n") != std::string::npos);
  REQUIRE(text.find("structure_augmentation seconds 0.81 ratio 18.66%\n") != std::string::npos);
  REQUIRE(text.find("total seconds 4.34\n") != std::string::npos);
  REQUIRE(format_timing(r) == text);
}

TEST_CASE("timing report averages across addresses") {
  std::vector<std::array<double, 4>> samples = {{1, 2, 3, 4}, {3, 2, 1, 0}};
  TimingReport r = timing_report(samples);
  REQUIRE(r.address_count == 2);
  REQUIRE(r.stage_seconds[0] == Catch::Approx(2.0).margin(1e-15));
  REQUIRE(r.stage_seconds[1] == Catch::Approx(2.0).margin(1e-15));
  REQUIRE(r.stage_seconds[2] == Catch::Approx(2.0).margin(1e-15));
  REQUIRE(r.stage_seconds[3] == Catch::Approx(2.0).margin(1e-15));
  REQUIRE(r.total_seconds == Catch::Approx(8.0).margin(1e-15));
  for (double p : r.ratio_percent) REQUIRE(p == Catch::Approx(25.0).margin(1e-12));
}

TEST_CASE("single nonzero stage owns the whole ratio") {
  std::vector<std::array<double, 4>> samples = {{0, 0, 1.5, 0}};
  TimingReport r = timing_report(samples);
  REQUIRE(r.ratio_percent[2] == Catch::Approx(100.0).margin(1e-12));
  REQUIRE(r.ratio_percent[0] == 0.0);
  REQUIRE(r.ratio_percent[1] == 0.0);
  REQUIRE(r.ratio_percent[3] == 0.0);
}

TEST_CASE("all-zero timings yield zero ratios rather than NaN") {
  std::vector<std::array<double, 4>> samples = {{0, 0, 0, 0}};
  TimingReport r = timing_report(samples);
  REQUIRE(r.total_seconds == 0.0);
  for (double p : r.ratio_percent) REQUIRE(p == 0.0);
}

TEST_CASE("random positive timings match a spreadsheet-style oracle") {
  Rng rng(911);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + static_cast<int>(rng.uniform_int(0, 19));
    std::vector<std::array<double, 4>> samples(static_cast<std::size_t>(n));
    std::array<double, 4> sums{};
    for (auto& row : samples)
      for (std::size_t s = 0; s < 4; ++s) {
        row[s] = rng.uniform(0.001, 10.0);
        sums[s] += row[s];
      }
    TimingReport r = timing_report(samples);
    double total = 0.0;
    for (std::size_t s = 0; s < 4; ++s) total += sums[s] / n;
    double ratio_sum = 0.0;
    for (std::size_t s = 0; s < 4; ++s) {
      const double mean = sums[s] / n;
      REQUIRE(r.stage_seconds[s] == Catch::Approx(mean).margin(1e-9));
      REQUIRE(r.ratio_percent[s] == Catch::Approx(100.0 * mean / total).margin(1e-4));
      ratio_sum += r.ratio_percent[s];
    }
    REQUIRE(r.total_seconds == Catch::Approx(total).margin(1e-9));
    REQUIRE(ratio_sum == Catch::Approx(100.0).margin(0.1));
  }
}

TEST_CASE("timing report rejects an empty sample set") {
  try {
    timing_report({});
    FAIL("expected empty_input");
  } catch (const Error& e) {
    REQUIRE(e.code() == Errc::empty_input);
  }
}

TEST_CASE("construction stage names are fixed and ordered") {
  REQUIRE(kConstructionStages.size() == 4);
  REQUIRE(std::string(kConstructionStages[0]) == "original_extraction");
  REQUIRE(std::string(kConstructionStages[1]) == "single_tx_compression");
  REQUIRE(std::string(kConstructionStages[2]) == "multi_tx_compression");
  REQUIRE(std::string(kConstructionStages[3]) == "structure_augmentation");
}
