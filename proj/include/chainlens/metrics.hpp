#pragma once

#include <array>
#include <cstdio>
#include <string>
#include <vector>

#include "chainlens/error.hpp"
#include "chainlens/tx.hpp"

namespace chainlens {

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  long support = 0;  // true-class count
};

struct MetricsReport {
  std::array<ClassMetrics, kClassCount> per_class;
  std::array<std::array<long, kClassCount>, kClassCount> confusion{};  // [true][predicted]
  double weighted_precision = 0.0;
  double weighted_recall = 0.0;
  double weighted_f1 = 0.0;
  double macro_f1 = 0.0;
  long total = 0;
};

// One-vs-rest precision/recall/F1 per class; weighted averages use true-class
// supports; zero denominators score 0.
inline MetricsReport evaluate(const std::vector<int>& predicted, const std::vector<int>& truth) {
  require(predicted.size() == truth.size(), Errc::input,
          "prediction/label length mismatch: " + std::to_string(predicted.size()) + " vs " +
              std::to_string(truth.size()));
  require(!predicted.empty(), Errc::input, "nothing to evaluate");

  MetricsReport report;
  report.total = static_cast<long>(predicted.size());
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    require(truth[i] >= 0 && truth[i] < kClassCount, Errc::bad_index,
            "true class " + std::to_string(truth[i]) + " out of range");
    require(predicted[i] >= 0 && predicted[i] < kClassCount, Errc::bad_index,
            "predicted class " + std::to_string(predicted[i]) + " out of range");
    ++report.confusion[static_cast<std::size_t>(truth[i])][static_cast<std::size_t>(predicted[i])];
  }

  double weighted_precision = 0.0, weighted_recall = 0.0, weighted_f1 = 0.0, macro_f1 = 0.0;
  for (int c = 0; c < kClassCount; ++c) {
    long tp = report.confusion[static_cast<std::size_t>(c)][static_cast<std::size_t>(c)];
    long fp = 0, fn = 0;
    for (int o = 0; o < kClassCount; ++o) {
      if (o == c) continue;
      fp += report.confusion[static_cast<std::size_t>(o)][static_cast<std::size_t>(c)];
      fn += report.confusion[static_cast<std::size_t>(c)][static_cast<std::size_t>(o)];
    }
    ClassMetrics& m = report.per_class[static_cast<std::size_t>(c)];
    m.support = tp + fn;
    m.precision = (tp + fp) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    m.recall = (tp + fn) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    m.f1 = (m.precision + m.recall) > 0.0
               ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
               : 0.0;
    weighted_precision += static_cast<double>(m.support) * m.precision;
    weighted_recall += static_cast<double>(m.support) * m.recall;
    weighted_f1 += static_cast<double>(m.support) * m.f1;
    macro_f1 += m.f1;
  }
  report.weighted_precision = weighted_precision / static_cast<double>(report.total);
  report.weighted_recall = weighted_recall / static_cast<double>(report.total);
  report.weighted_f1 = weighted_f1 / static_cast<double>(report.total);
  report.macro_f1 = macro_f1 / static_cast<double>(kClassCount);
  return report;
}

namespace detail {

inline std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

inline std::string fixed2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

}  // namespace detail

inline std::string format_metrics(const MetricsReport& r) {
  std::string out;
  for (int c = 0; c < kClassCount; ++c) {
    const ClassMetrics& m = r.per_class[static_cast<std::size_t>(c)];
    out += "class ";
    out += class_name(static_cast<BehaviorClass>(c));
    out += " precision " + detail::fixed6(m.precision);
    out += " recall " + detail::fixed6(m.recall);
    out += " f1 " + detail::fixed6(m.f1);
    out += " support " + std::to_string(m.support) + "\n";
  }
  out += "weighted_avg precision " + detail::fixed6(r.weighted_precision);
  out += " recall " + detail::fixed6(r.weighted_recall);
  out += " f1 " + detail::fixed6(r.weighted_f1) + "\n";
  out += "macro_f1 " + detail::fixed6(r.macro_f1) + "\n";
  out += "total " + std::to_string(r.total) + "\n";
  out += "confusion\n";
  for (int t = 0; t < kClassCount; ++t) {
    for (int p = 0; p < kClassCount; ++p) {
      if (p) out += ' ';
      out += std::to_string(r.confusion[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)]);
    }
    out += '\n';
  }
  return out;
}

// Graph-construction stages, in pipeline order.
inline constexpr std::array<const char*, 4> kConstructionStages = {
    "original_extraction",
    "single_tx_compression",
    "multi_tx_compression",
    "structure_augmentation",
};

struct TimingReport {
  std::array<double, 4> stage_seconds{};  // mean per address
  std::array<double, 4> ratio_percent{};
  double total_seconds = 0.0;
  long address_count = 0;
};

// Means and ratios over per-address stage timings.
inline TimingReport timing_report(const std::vector<std::array<double, 4>>& per_address) {
  require(!per_address.empty(), Errc::empty_input, "no measured addresses");
  TimingReport r;
  r.address_count = static_cast<long>(per_address.size());
  for (const auto& stages : per_address)
    for (std::size_t s = 0; s < 4; ++s) r.stage_seconds[s] += stages[s];
  for (std::size_t s = 0; s < 4; ++s) {
    r.stage_seconds[s] /= static_cast<double>(per_address.size());
    r.total_seconds += r.stage_seconds[s];
  }
  for (std::size_t s = 0; s < 4; ++s)
    r.ratio_percent[s] =
        r.total_seconds > 0.0 ? 100.0 * r.stage_seconds[s] / r.total_seconds : 0.0;
  return r;
}

inline std::string format_timing(const TimingReport& r) {
  std::string out = "addresses " + std::to_string(r.address_count) + "\n";
  for (std::size_t s = 0; s < 4; ++s) {
    out += kConstructionStages[s];
    out += " seconds " + detail::fixed2(r.stage_seconds[s]);
    out += " ratio " + detail::fixed2(r.ratio_percent[s]) + "%\n";
  }
  out += "total seconds " + detail::fixed2(r.total_seconds) + "\n";
  return out;
}

}  // namespace chainlens
