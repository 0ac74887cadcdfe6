#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include <Eigen/Dense>

#include "chainlens/error.hpp"
#include "chainlens/graph.hpp"
#include "chainlens/sfe.hpp"

namespace chainlens {

struct CompressionConfig {
  double psi = 0.5;  // minimum pairwise similarity for merging
  int sigma = 2;     // minimum similar-neighbor count for a merge seed

  void validate() const {
    require(psi > 0.0 && psi <= 1.0, Errc::config, "psi must be in (0, 1]");
    require(sigma >= 0, Errc::config, "sigma must be >= 0");
  }
};

// A node's feature source: merged raw values for hyper nodes, incident edge
// values otherwise.
inline std::vector<std::int64_t> node_value_multiset(const AddressGraph& g, int node) {
  const Node& n = g.nodes[node];
  if (!n.raw_values.empty()) return n.raw_values;
  std::vector<std::int64_t> vals;
  for (const Edge& e : g.edges)
    if (e.address_node == node || e.tx_node == node) vals.push_back(e.value);
  return vals;
}

inline SfeVector node_sfe(const AddressGraph& g, int node) {
  const auto vals = node_value_multiset(g, node);
  require(!vals.empty(), Errc::feature,
          "node '" + g.nodes[node].key + "' has no raw values and no incident edges");
  return sfe_of_satoshis(vals);
}

namespace detail {

// Rebuild a graph keeping `keep[i]` nodes, then append hyper nodes. `groups`
// maps each new hyper node to its member node indices; member edges are
// re-wired to the hyper node with values summed per (transaction, direction).
struct HyperGroup {
  NodeKind kind = NodeKind::SingleTxHyper;
  std::string key;
  std::vector<int> members;  // original node indices, ascending
};

inline AddressGraph rebuild_with_groups(const AddressGraph& g, const std::vector<char>& consumed,
                                        const std::vector<HyperGroup>& groups) {
  AddressGraph out;
  out.window_index = g.window_index;

  std::vector<int> remap(g.nodes.size(), -1);
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    if (consumed[i]) continue;
    remap[i] = static_cast<int>(out.nodes.size());
    out.nodes.push_back(g.nodes[i]);
  }
  std::vector<int> group_node(groups.size());
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    Node hyper;
    hyper.kind = groups[gi].kind;
    hyper.key = groups[gi].key;
    group_node[gi] = static_cast<int>(out.nodes.size());
    out.nodes.push_back(std::move(hyper));
  }
  std::vector<int> member_group(g.nodes.size(), -1);
  for (std::size_t gi = 0; gi < groups.size(); ++gi)
    for (int m : groups[gi].members) member_group[m] = static_cast<int>(gi);

  // Merged edges accumulate per (hyper node, tx node, direction), in first-seen
  // order so output is deterministic.
  std::map<std::tuple<int, int, int>, std::size_t> merged_edge;
  for (const Edge& e : g.edges) {
    const int gi = member_group[e.address_node];
    if (gi < 0) {
      Edge copy = e;
      copy.address_node = remap[e.address_node];
      copy.tx_node = remap[e.tx_node];
      out.edges.push_back(copy);
      continue;
    }
    const int hyper = group_node[gi];
    const int tx = remap[e.tx_node];
    out.nodes[hyper].raw_values.push_back(e.value);
    const auto key = std::make_tuple(hyper, tx, static_cast<int>(e.direction));
    auto it = merged_edge.find(key);
    if (it != merged_edge.end()) {
      out.edges[it->second].value += e.value;
    } else {
      out.edges.push_back(Edge{hyper, tx, e.direction, e.value});
      merged_edge.emplace(key, out.edges.size() - 1);
    }
  }

  out.target_node = g.target_node >= 0 ? remap[g.target_node] : -1;
  return out;
}

}  // namespace detail

// Merges, per transaction and per direction, all non-target plain address
// nodes whose whole-graph degree is 1 into one single-transaction hyper node.
inline AddressGraph compress_single_tx_addresses(const AddressGraph& g) {
  const std::vector<int> degree = g.edge_degrees();

  // (tx node, direction) -> candidate member nodes, in node order
  std::map<std::pair<int, int>, std::vector<int>> buckets;
  std::vector<char> consumed(g.nodes.size(), 0);
  for (const Edge& e : g.edges) {
    const Node& a = g.nodes[e.address_node];
    if (a.kind != NodeKind::PlainAddress || a.is_target) continue;
    if (degree[e.address_node] != 1) continue;
    buckets[{e.tx_node, static_cast<int>(e.direction)}].push_back(e.address_node);
  }
  if (buckets.empty()) return g;

  std::vector<detail::HyperGroup> groups;
  for (auto& [key, members] : buckets) {
    std::sort(members.begin(), members.end());
    detail::HyperGroup group;
    group.kind = NodeKind::SingleTxHyper;
    group.key = "s_hyper:" + g.nodes[key.first].key + ":" +
                direction_name(static_cast<Direction>(key.second));
    group.members = members;
    for (int m : members) consumed[m] = 1;
    groups.push_back(std::move(group));
  }
  return detail::rebuild_with_groups(g, consumed, groups);
}

// Incidence/similarity algebra over the multi-transaction address nodes:
// S = A·Aᵀ counts common transactions, M = S·D⁻¹ normalizes by the column
// node's transaction count, Q = ReLU(M − Ψ·ones).
struct SimilarityWorkspace {
  std::vector<int> address_nodes;  // graph node index per matrix row
  std::vector<int> tx_nodes;       // graph node index per matrix column
  Eigen::MatrixXd incidence;       // A, n×d binary
  Eigen::MatrixXd common;          // S = A·Aᵀ
  Eigen::VectorXd degree;          // diag(S): transactions per address node
  Eigen::MatrixXd normalized;      // M = S·D⁻¹
  Eigen::MatrixXd thresholded;     // Q = ReLU(M − Ψ)
};

namespace detail {

// Multi-transaction candidates: non-target plain address nodes connected to
// at least two distinct transactions.
inline std::vector<int> multi_tx_candidates(const AddressGraph& g,
                                            std::vector<std::set<int>>* tx_sets_out = nullptr) {
  std::vector<std::set<int>> tx_sets(g.nodes.size());
  for (const Edge& e : g.edges) tx_sets[e.address_node].insert(e.tx_node);
  std::vector<int> candidates;
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    const Node& n = g.nodes[i];
    if (n.kind != NodeKind::PlainAddress || n.is_target) continue;
    if (tx_sets[i].size() >= 2) candidates.push_back(static_cast<int>(i));
  }
  if (tx_sets_out) *tx_sets_out = std::move(tx_sets);
  return candidates;
}

}  // namespace detail

inline SimilarityWorkspace address_similarity(const AddressGraph& g, double psi) {
  SimilarityWorkspace ws;
  std::vector<std::set<int>> tx_sets;
  ws.address_nodes = detail::multi_tx_candidates(g, &tx_sets);

  std::map<int, int> tx_col;
  for (std::size_t i = 0; i < g.nodes.size(); ++i)
    if (g.nodes[i].kind == NodeKind::TransactionNode) {
      tx_col.emplace(static_cast<int>(i), static_cast<int>(ws.tx_nodes.size()));
      ws.tx_nodes.push_back(static_cast<int>(i));
    }

  const Eigen::Index n = static_cast<Eigen::Index>(ws.address_nodes.size());
  const Eigen::Index d = static_cast<Eigen::Index>(ws.tx_nodes.size());
  ws.incidence = Eigen::MatrixXd::Zero(n, d);
  for (Eigen::Index r = 0; r < n; ++r)
    for (int tx : tx_sets[static_cast<std::size_t>(ws.address_nodes[r])])
      ws.incidence(r, tx_col.at(tx)) = 1.0;

  ws.common = ws.incidence * ws.incidence.transpose();
  ws.degree = ws.common.diagonal();
  for (Eigen::Index r = 0; r < n; ++r)
    require(ws.degree(r) > 0.0, Errc::malformed_graph,
            "address node '" + g.nodes[ws.address_nodes[r]].key +
                "' has zero transactions; degree matrix not invertible");

  // Column-wise scalar division, not multiplication by a precomputed inverse:
  // s_ij / s_jj is correctly rounded, s_ij * (1/s_jj) is not.
  ws.normalized.resize(n, n);
  for (Eigen::Index c = 0; c < n; ++c)
    for (Eigen::Index r = 0; r < n; ++r) ws.normalized(r, c) = ws.common(r, c) / ws.degree(c);
  ws.thresholded = (ws.normalized.array() - psi).cwiseMax(0.0).matrix();
  return ws;
}

// Greedy disjoint merging of similar multi-transaction addresses. Seeds are
// rows with more than sigma nonzero thresholded entries, processed by
// descending nonzero count with lexicographic key tie-break; each node joins
// at most one group, and a group needs at least two surviving members.
inline AddressGraph compress_multi_tx_addresses(const AddressGraph& g,
                                                const CompressionConfig& config) {
  config.validate();
  const std::vector<int> candidates = detail::multi_tx_candidates(g);
  if (candidates.empty()) return g;

  const SimilarityWorkspace ws = address_similarity(g, config.psi);
  const Eigen::Index n = static_cast<Eigen::Index>(ws.address_nodes.size());

  std::vector<int> nonzero(static_cast<std::size_t>(n), 0);
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index c = 0; c < n; ++c)
      if (ws.thresholded(r, c) > 0.0) ++nonzero[static_cast<std::size_t>(r)];

  std::vector<Eigen::Index> seeds;
  for (Eigen::Index r = 0; r < n; ++r)
    if (nonzero[static_cast<std::size_t>(r)] > config.sigma) seeds.push_back(r);
  std::sort(seeds.begin(), seeds.end(), [&](Eigen::Index a, Eigen::Index b) {
    const int na = nonzero[static_cast<std::size_t>(a)];
    const int nb = nonzero[static_cast<std::size_t>(b)];
    if (na != nb) return na > nb;
    return g.nodes[ws.address_nodes[a]].key < g.nodes[ws.address_nodes[b]].key;
  });

  std::vector<char> consumed(g.nodes.size(), 0);
  std::vector<detail::HyperGroup> groups;
  for (Eigen::Index seed : seeds) {
    const int seed_node = ws.address_nodes[seed];
    if (consumed[seed_node]) continue;
    std::vector<int> members;
    for (Eigen::Index c = 0; c < n; ++c) {
      const int node = ws.address_nodes[c];
      if (ws.thresholded(seed, c) > 0.0 && !consumed[node]) members.push_back(node);
    }
    if (members.size() < 2) continue;
    std::sort(members.begin(), members.end());
    detail::HyperGroup group;
    group.kind = NodeKind::MultiTxHyper;
    group.key = "m_hyper:" + g.nodes[seed_node].key;
    group.members = members;
    for (int m : members) consumed[m] = 1;
    groups.push_back(std::move(group));
  }
  if (groups.empty()) return g;
  return detail::rebuild_with_groups(g, consumed, groups);
}

}  // namespace chainlens
