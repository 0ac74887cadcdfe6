// Independent reference implementations used only to cross-check the library.
// Everything here is deliberately written the naive way.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "chainlens/nn.hpp"
#include "chainlens/rng.hpp"

namespace oracles {

// --- statistics -------------------------------------------------------------

struct Stats {
  double max, min, sum, mean, count, range, mid_range, p25, p50, p75, variance, std_dev,
      mean_abs_dev, coeff_variation, kurtosis, skewness, tilt;
};

inline double percentile(std::vector<double> sorted, double q) {
  const double rank = q * static_cast<double>(sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(rank));
  const std::size_t hi = static_cast<std::size_t>(std::ceil(rank));
  const double frac = rank - std::floor(rank);
  return sorted[lo] + (sorted[hi] - sorted[lo]) * frac;
}

inline Stats stats(const std::vector<double>& values) {
  Stats s{};
  std::vector<double> sorted = values;
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(values.size());
  s.max = sorted.back();
  s.min = sorted.front();
  s.sum = 0.0;
  for (double v : values) s.sum += v;
  s.mean = s.sum / n;
  s.count = n;
  s.range = s.max - s.min;
  s.mid_range = (s.max + s.min) / 2.0;
  s.p25 = percentile(sorted, 0.25);
  s.p50 = percentile(sorted, 0.50);
  s.p75 = percentile(sorted, 0.75);
  double m2 = 0.0, m3 = 0.0, m4 = 0.0, mad = 0.0;
  for (double v : values) {
    const double d = v - s.mean;
    m2 += d * d;
    m3 += d * d * d;
    m4 += d * d * d * d;
    mad += std::abs(d);
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;
  s.variance = m2;
  s.std_dev = std::sqrt(m2);
  s.mean_abs_dev = mad / n;
  s.coeff_variation = s.mean != 0.0 ? s.std_dev / s.mean : 0.0;
  s.kurtosis = m2 > 0.0 ? m4 / (m2 * m2) - 3.0 : 0.0;
  s.skewness = m2 > 0.0 ? m3 / std::pow(m2, 1.5) : 0.0;
  s.tilt = s.std_dev > 0.0 ? (s.mean - s.p50) / s.std_dev : 0.0;
  return s;
}

// --- centrality -------------------------------------------------------------

using Adjacency = std::vector<std::vector<int>>;

inline std::vector<std::vector<int>> floyd_warshall(const Adjacency& adj) {
  const int n = static_cast<int>(adj.size());
  const int inf = std::numeric_limits<int>::max() / 4;
  std::vector<std::vector<int>> dist(n, std::vector<int>(n, inf));
  for (int i = 0; i < n; ++i) dist[i][i] = 0;
  for (int i = 0; i < n; ++i)
    for (int j : adj[i]) dist[i][j] = 1;
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        dist[i][j] = std::min(dist[i][j], dist[i][k] + dist[k][j]);
  return dist;
}

inline std::vector<double> closeness(const Adjacency& adj) {
  const int n = static_cast<int>(adj.size());
  const auto dist = floyd_warshall(adj);
  const int inf = std::numeric_limits<int>::max() / 4;
  std::vector<double> out(adj.size(), 0.0);
  if (n <= 1) return out;
  for (int i = 0; i < n; ++i) {
    long long total = 0;
    int reachable = 0;
    for (int j = 0; j < n; ++j)
      if (dist[i][j] < inf) {
        total += dist[i][j];
        ++reachable;
      }
    if (reachable <= 1 || total == 0) continue;
    const double r1 = reachable - 1;
    out[static_cast<std::size_t>(i)] = (r1 / static_cast<double>(total)) * (r1 / (n - 1));
  }
  return out;
}

// Exhaustive shortest-path enumeration: DFS over all simple paths s->t of the
// BFS-shortest length, counting interior visits.
inline std::vector<double> betweenness(const Adjacency& adj) {
  const int n = static_cast<int>(adj.size());
  const auto dist = floyd_warshall(adj);
  const int inf = std::numeric_limits<int>::max() / 4;
  std::vector<double> out(adj.size(), 0.0);

  std::vector<int> path;
  long long sigma_total = 0;
  std::vector<long long> sigma_through;
  std::function<void(int, int, int)> dfs = [&](int u, int t, int remaining) {
    if (u == t) {
      ++sigma_total;
      for (std::size_t i = 1; i + 1 < path.size(); ++i) ++sigma_through[path[i]];
      return;
    }
    if (remaining == 0) return;
    for (int v : adj[u]) {
      if (dist[v][t] != remaining - 1) continue;
      path.push_back(v);
      dfs(v, t, remaining - 1);
      path.pop_back();
    }
  };

  for (int s = 0; s < n; ++s)
    for (int t = s + 1; t < n; ++t) {
      if (dist[s][t] >= inf || dist[s][t] == 0) continue;
      sigma_total = 0;
      sigma_through.assign(adj.size(), 0);
      path = {s};
      dfs(s, t, dist[s][t]);
      if (sigma_total == 0) continue;
      for (int v = 0; v < n; ++v)
        if (v != s && v != t && sigma_through[v] > 0)
          out[static_cast<std::size_t>(v)] +=
              static_cast<double>(sigma_through[v]) / static_cast<double>(sigma_total);
    }
  return out;
}

// Dense transition-matrix power iteration, run far past the tested tolerance.
inline std::vector<double> pagerank(const Adjacency& adj, double alpha, int iters = 20000) {
  const int n = static_cast<int>(adj.size());
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, n);
  for (int j = 0; j < n; ++j) {
    if (adj[j].empty()) {
      for (int i = 0; i < n; ++i) p(i, j) = 1.0 / n;
    } else {
      for (int i : adj[j]) p(i, j) = 1.0 / static_cast<double>(adj[j].size());
    }
  }
  Eigen::VectorXd r = Eigen::VectorXd::Constant(n, 1.0 / n);
  for (int it = 0; it < iters; ++it) {
    Eigen::VectorXd next = (1.0 - alpha) / n * Eigen::VectorXd::Ones(n) + alpha * (p * r);
    if ((next - r).lpNorm<1>() < 1e-15) {
      r = next;
      break;
    }
    r = next;
  }
  return {r.data(), r.data() + n};
}

// Uniform random simple undirected graph on up to max_nodes nodes.
inline Adjacency random_graph(chainlens::Rng& rng, int max_nodes = 10) {
  const int n = static_cast<int>(rng.uniform_int(1, max_nodes));
  Adjacency adj(static_cast<std::size_t>(n));
  const double p = rng.uniform(0.1, 0.7);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (rng.chance(p)) {
        adj[static_cast<std::size_t>(i)].push_back(j);
        adj[static_cast<std::size_t>(j)].push_back(i);
      }
  return adj;
}

// --- gradient checking ------------------------------------------------------

// Central finite differences over every element of every view. `loss` must be
// a pure function of the parameters behind the views.
inline double max_relative_gradient_error(const std::vector<chainlens::ParamView>& params,
                                          const std::vector<chainlens::ParamView>& analytic,
                                          const std::function<double()>& loss,
                                          double h = 1e-5) {
  double worst = 0.0;
  for (std::size_t v = 0; v < params.size(); ++v) {
    for (Eigen::Index j = 0; j < params[v].size(); ++j) {
      double& p = params[v].data[j];
      const double saved = p;
      p = saved + h;
      const double up = loss();
      p = saved - h;
      const double down = loss();
      p = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double a = analytic[v].data[j];
      const double rel =
          std::abs(a - numeric) / std::max({1e-4, std::abs(a), std::abs(numeric)});
      worst = std::max(worst, rel);
    }
  }
  return worst;
}

// --- lstm reference cell ----------------------------------------------------

struct RefLstmOut {
  Eigen::VectorXd h, c;
};

// Direct transcription of the gate equations with scalar loops.
inline RefLstmOut ref_lstm_cell(const Eigen::MatrixXd& wf, const Eigen::VectorXd& bf,
                                const Eigen::MatrixXd& wi, const Eigen::VectorXd& bi,
                                const Eigen::MatrixXd& wc, const Eigen::VectorXd& bc,
                                const Eigen::MatrixXd& wo, const Eigen::VectorXd& bo,
                                const Eigen::VectorXd& h_prev, const Eigen::VectorXd& c_prev,
                                const Eigen::VectorXd& x) {
  const Eigen::Index hidden = wf.rows();
  Eigen::VectorXd z(h_prev.size() + x.size());
  z << h_prev, x;
  auto gate = [&](const Eigen::MatrixXd& w, const Eigen::VectorXd& b, bool is_tanh) {
    Eigen::VectorXd out(hidden);
    for (Eigen::Index r = 0; r < hidden; ++r) {
      double acc = b(r);
      for (Eigen::Index c = 0; c < z.size(); ++c) acc += w(r, c) * z(c);
      out(r) = is_tanh ? std::tanh(acc) : 1.0 / (1.0 + std::exp(-acc));
    }
    return out;
  };
  const Eigen::VectorXd f = gate(wf, bf, false);
  const Eigen::VectorXd i = gate(wi, bi, false);
  const Eigen::VectorXd g = gate(wc, bc, true);
  const Eigen::VectorXd o = gate(wo, bo, false);
  RefLstmOut out;
  out.c.resize(hidden);
  out.h.resize(hidden);
  for (Eigen::Index r = 0; r < hidden; ++r) {
    out.c(r) = f(r) * c_prev(r) + i(r) * g(r);
    out.h(r) = o(r) * std::tanh(out.c(r));
  }
  return out;
}

}  // namespace oracles
