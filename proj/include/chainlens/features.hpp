#pragma once

#include <array>
#include <cmath>
#include <cstddef>

#include <Eigen/Dense>

#include "chainlens/centrality.hpp"
#include "chainlens/compress.hpp"
#include "chainlens/error.hpp"
#include "chainlens/graph.hpp"
#include "chainlens/sfe.hpp"

namespace chainlens {

inline constexpr int kNodeFeatureWidth = SfeVector::kWidth + 4 + 1 + 4;  // 26

inline double signed_log1p(double x) { return x < 0.0 ? -std::log1p(-x) : std::log1p(x); }

// Value-summary components squashed to comparable scales: signed log1p on the
// location/spread components, plain log1p on the nonnegative count and
// variance, shape ratios left raw.
inline std::array<double, SfeVector::kWidth> transform_sfe(const SfeVector& s) {
  return {
      signed_log1p(s.max),
      signed_log1p(s.min),
      signed_log1p(s.sum),
      signed_log1p(s.mean),
      std::log1p(s.count),
      signed_log1p(s.range),
      signed_log1p(s.mid_range),
      signed_log1p(s.p25),
      signed_log1p(s.p50),
      signed_log1p(s.p75),
      std::log1p(s.variance),
      signed_log1p(s.std_dev),
      signed_log1p(s.mean_abs_dev),
      s.coeff_variation,
      s.kurtosis,
      s.skewness,
      s.tilt,
  };
}

// One 26-wide row per node: transformed value summary, node-kind one-hot,
// target flag, then degree/closeness/betweenness/pagerank.
inline Eigen::MatrixXd assemble_node_features(const AddressGraph& g, const Centralities& c) {
  const Eigen::Index n = static_cast<Eigen::Index>(g.nodes.size());
  require(c.degree.size() == n && c.closeness.size() == n && c.betweenness.size() == n &&
              c.pagerank.size() == n,
          Errc::shape, "centrality vectors do not match node count");
  Eigen::MatrixXd x(n, kNodeFeatureWidth);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto s = transform_sfe(node_sfe(g, static_cast<int>(i)));
    Eigen::Index col = 0;
    for (double v : s) x(i, col++) = v;
    for (int k = 0; k < 4; ++k)
      x(i, col++) = static_cast<int>(g.nodes[static_cast<std::size_t>(i)].kind) == k ? 1.0 : 0.0;
    x(i, col++) = g.nodes[static_cast<std::size_t>(i)].is_target ? 1.0 : 0.0;
    x(i, col++) = c.degree(i);
    x(i, col++) = c.closeness(i);
    x(i, col++) = c.betweenness(i);
    x(i, col++) = c.pagerank(i);
  }
  return x;
}

inline Eigen::MatrixXd assemble_node_features(const AddressGraph& g,
                                              const CentralityConfig& config = {}) {
  return assemble_node_features(g, compute_centralities(g, config));
}

}  // namespace chainlens
