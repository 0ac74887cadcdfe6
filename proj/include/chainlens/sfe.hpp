#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "chainlens/error.hpp"

namespace chainlens {

// Fixed 17-component statistics vector summarizing a multiset of transferred
// values. Population moments throughout so every component is defined at n = 1;
// every ratio statistic is 0 when its denominator is 0.
struct SfeVector {
  static constexpr int kWidth = 17;

  double max = 0;
  double min = 0;
  double sum = 0;
  double mean = 0;
  double count = 0;
  double range = 0;
  double mid_range = 0;
  double p25 = 0;
  double p50 = 0;
  double p75 = 0;
  double variance = 0;
  double std_dev = 0;
  double mean_abs_dev = 0;
  double coeff_variation = 0;
  double kurtosis = 0;
  double skewness = 0;
  double tilt = 0;

  std::array<double, kWidth> as_array() const {
    return {max,      min,      sum,          mean,          count,    range,
            mid_range, p25,     p50,          p75,           variance, std_dev,
            mean_abs_dev, coeff_variation, kurtosis, skewness, tilt};
  }
};

// Percentile by linear interpolation on sorted data: rank q*(n-1).
inline double percentile_sorted(std::span<const double> sorted, double q) {
  const std::size_t n = sorted.size();
  if (n == 1) return sorted[0];
  const double rank = q * static_cast<double>(n - 1);
  const std::size_t lo = static_cast<std::size_t>(rank);
  const double frac = rank - static_cast<double>(lo);
  if (lo + 1 >= n) return sorted[n - 1];
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

inline SfeVector sfe(std::span<const double> values) {
  require(!values.empty(), Errc::empty_input, "sfe needs at least one value");
  const std::size_t n = values.size();
  const double dn = static_cast<double>(n);

  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());

  SfeVector out;
  out.count = dn;
  out.min = sorted.front();
  out.max = sorted.back();
  out.range = out.max - out.min;
  out.mid_range = (out.max + out.min) / 2.0;
  out.p25 = percentile_sorted(sorted, 0.25);
  out.p50 = percentile_sorted(sorted, 0.50);
  out.p75 = percentile_sorted(sorted, 0.75);

  double sum = 0;
  for (double v : sorted) sum += v;
  out.sum = sum;
  out.mean = sum / dn;

  double m2 = 0, m3 = 0, m4 = 0, mad = 0;
  for (double v : sorted) {
    const double d = v - out.mean;
    const double d2 = d * d;
    m2 += d2;
    m3 += d2 * d;
    m4 += d2 * d2;
    mad += std::abs(d);
  }
  m2 /= dn;
  m3 /= dn;
  m4 /= dn;
  out.variance = m2;
  out.std_dev = std::sqrt(m2);
  out.mean_abs_dev = mad / dn;
  out.coeff_variation = out.mean != 0.0 ? out.std_dev / out.mean : 0.0;
  out.skewness = m2 > 0.0 ? m3 / std::pow(m2, 1.5) : 0.0;
  out.kurtosis = m2 > 0.0 ? m4 / (m2 * m2) - 3.0 : 0.0;
  out.tilt = out.std_dev > 0.0 ? (out.mean - out.p50) / out.std_dev : 0.0;
  return out;
}

inline SfeVector sfe_of_satoshis(std::span<const std::int64_t> values) {
  std::vector<double> doubles(values.begin(), values.end());
  return sfe(doubles);
}

}  // namespace chainlens
