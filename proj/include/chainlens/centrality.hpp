#pragma once

#include <algorithm>
#include <cstddef>
#include <deque>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "chainlens/error.hpp"
#include "chainlens/graph.hpp"

namespace chainlens {

struct CentralityConfig {
  double alpha = 0.85;       // PageRank damping factor
  double tolerance = 1e-10;  // L1 convergence threshold
  int max_iters = 200;

  void validate() const {
    require(alpha > 0.0 && alpha < 1.0, Errc::config, "alpha must be in (0, 1)");
    require(tolerance > 0.0, Errc::config, "pr_tolerance must be > 0");
    require(max_iters >= 1, Errc::config, "pr_max_iters must be >= 1");
  }
};

// Undirected simple projection: parallel and anti-parallel edges collapse to
// one adjacency. Neighbor lists come out sorted and duplicate-free.
inline std::vector<std::vector<int>> undirected_adjacency(const AddressGraph& g) {
  std::vector<std::set<int>> sets(g.nodes.size());
  for (const Edge& e : g.edges) {
    if (e.address_node == e.tx_node) continue;
    sets[e.address_node].insert(e.tx_node);
    sets[e.tx_node].insert(e.address_node);
  }
  std::vector<std::vector<int>> adj(g.nodes.size());
  for (std::size_t i = 0; i < sets.size(); ++i) adj[i].assign(sets[i].begin(), sets[i].end());
  return adj;
}

inline Eigen::VectorXd degree_centrality(const std::vector<std::vector<int>>& adj) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(adj.size()));
  for (std::size_t i = 0; i < adj.size(); ++i)
    out(static_cast<Eigen::Index>(i)) = static_cast<double>(adj[i].size());
  return out;
}

namespace detail {

// BFS distances from `source`; unreached nodes stay -1.
inline void bfs_distances(const std::vector<std::vector<int>>& adj, int source,
                          std::vector<int>& dist) {
  dist.assign(adj.size(), -1);
  dist[source] = 0;
  std::deque<int> queue{source};
  while (!queue.empty()) {
    const int u = queue.front();
    queue.pop_front();
    for (int v : adj[u])
      if (dist[v] < 0) {
        dist[v] = dist[u] + 1;
        queue.push_back(v);
      }
  }
}

}  // namespace detail

// Closeness with the Wasserman-Faust reachable-share correction:
// (r-1)/sum(d) * (r-1)/(n-1) where r counts the node's reachable set
// (itself included). Isolated nodes score 0.
inline Eigen::VectorXd closeness_centrality(const std::vector<std::vector<int>>& adj) {
  const std::size_t n = adj.size();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  if (n <= 1) return out;
  std::vector<int> dist;
  for (std::size_t i = 0; i < n; ++i) {
    detail::bfs_distances(adj, static_cast<int>(i), dist);
    long long sum = 0;
    long long reachable = 0;
    for (int d : dist)
      if (d >= 0) {
        sum += d;
        ++reachable;
      }
    if (reachable <= 1 || sum == 0) continue;
    const double r1 = static_cast<double>(reachable - 1);
    out(static_cast<Eigen::Index>(i)) =
        (r1 / static_cast<double>(sum)) * (r1 / static_cast<double>(n - 1));
  }
  return out;
}

// Brandes' algorithm, unnormalized, over unordered pairs: the directed
// accumulation counts each pair twice on an undirected graph, so halve it.
inline Eigen::VectorXd betweenness_centrality(const std::vector<std::vector<int>>& adj) {
  const std::size_t n = adj.size();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  std::vector<int> stack_order;
  std::vector<std::vector<int>> preds(n);
  std::vector<double> sigma(n), delta(n);
  std::vector<int> dist(n);
  for (std::size_t s = 0; s < n; ++s) {
    stack_order.clear();
    for (auto& p : preds) p.clear();
    std::fill(sigma.begin(), sigma.end(), 0.0);
    std::fill(dist.begin(), dist.end(), -1);
    sigma[s] = 1.0;
    dist[s] = 0;
    std::deque<int> queue{static_cast<int>(s)};
    while (!queue.empty()) {
      const int u = queue.front();
      queue.pop_front();
      stack_order.push_back(u);
      for (int v : adj[u]) {
        if (dist[v] < 0) {
          dist[v] = dist[u] + 1;
          queue.push_back(v);
        }
        if (dist[v] == dist[u] + 1) {
          sigma[v] += sigma[u];
          preds[v].push_back(u);
        }
      }
    }
    std::fill(delta.begin(), delta.end(), 0.0);
    for (auto it = stack_order.rbegin(); it != stack_order.rend(); ++it) {
      const int w = *it;
      for (int u : preds[w]) delta[u] += sigma[u] / sigma[w] * (1.0 + delta[w]);
      if (static_cast<std::size_t>(w) != s) out(w) += delta[w];
    }
  }
  return out / 2.0;
}

// Power iteration on the undirected view. Dangling (isolated) nodes spread
// their mass uniformly; exit when the L1 step change drops below tolerance.
inline Eigen::VectorXd pagerank(const std::vector<std::vector<int>>& adj,
                                const CentralityConfig& config = {}) {
  config.validate();
  const Eigen::Index n = static_cast<Eigen::Index>(adj.size());
  if (n == 0) return Eigen::VectorXd();
  Eigen::VectorXd rank = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  Eigen::VectorXd next(n);
  double residual = 0.0;
  for (int iter = 0; iter < config.max_iters; ++iter) {
    double dangling = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      if (adj[static_cast<std::size_t>(i)].empty()) dangling += rank(i);
    const double base = (1.0 - config.alpha + config.alpha * dangling) / static_cast<double>(n);
    next.setConstant(base);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto& nbrs = adj[static_cast<std::size_t>(i)];
      if (nbrs.empty()) continue;
      const double share = config.alpha * rank(i) / static_cast<double>(nbrs.size());
      for (int v : nbrs) next(v) += share;
    }
    residual = (next - rank).lpNorm<1>();
    rank.swap(next);
    if (residual < config.tolerance) return rank;
  }
  fail(Errc::convergence,
       "pagerank did not converge in " + std::to_string(config.max_iters) +
           " iterations; L1 residual " + std::to_string(residual));
}

struct Centralities {
  Eigen::VectorXd degree;
  Eigen::VectorXd closeness;
  Eigen::VectorXd betweenness;
  Eigen::VectorXd pagerank;
};

inline Centralities compute_centralities(const AddressGraph& g,
                                         const CentralityConfig& config = {}) {
  const auto adj = undirected_adjacency(g);
  Centralities c;
  c.degree = degree_centrality(adj);
  c.closeness = closeness_centrality(adj);
  c.betweenness = betweenness_centrality(adj);
  c.pagerank = chainlens::pagerank(adj, config);
  return c;
}

}  // namespace chainlens
