#pragma once

#include <cstdint>
#include <map>
#include <ostream>
#include <string>
#include <string_view>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "chainlens/error.hpp"
#include "chainlens/tx.hpp"

namespace chainlens {

inline constexpr int kDefaultSliceUnit = 100;

enum class NodeKind : int {
  PlainAddress = 0,
  TransactionNode = 1,
  SingleTxHyper = 2,
  MultiTxHyper = 3,
};

inline const char* node_kind_name(NodeKind k) {
  switch (k) {
    case NodeKind::PlainAddress: return "addr";
    case NodeKind::TransactionNode: return "tx";
    case NodeKind::SingleTxHyper: return "s_hyper";
    case NodeKind::MultiTxHyper: return "m_hyper";
  }
  return "unknown";
}

inline NodeKind parse_node_kind(std::string_view name) {
  if (name == "addr") return NodeKind::PlainAddress;
  if (name == "tx") return NodeKind::TransactionNode;
  if (name == "s_hyper") return NodeKind::SingleTxHyper;
  if (name == "m_hyper") return NodeKind::MultiTxHyper;
  fail(Errc::parse, "unknown node kind '" + std::string(name) + "'");
}

enum class Direction : int { Input = 0, Output = 1 };

inline const char* direction_name(Direction d) {
  return d == Direction::Input ? "in" : "out";
}

struct Node {
  NodeKind kind = NodeKind::PlainAddress;
  std::string key;
  bool is_target = false;
  // Satoshi amounts accumulated when address nodes were merged into this one.
  // Empty for plain address and transaction nodes.
  std::vector<std::int64_t> raw_values;
};

// Every edge joins an address-kind node to a transaction node. Direction is an
// edge attribute: Input means the address funds the transaction.
struct Edge {
  int address_node = -1;
  int tx_node = -1;
  Direction direction = Direction::Input;
  std::int64_t value = 0;
};

struct AddressGraph {
  std::vector<Node> nodes;
  std::vector<Edge> edges;
  int target_node = -1;
  int window_index = 0;

  bool is_address_kind(int node) const {
    return nodes[node].kind != NodeKind::TransactionNode;
  }

  // Incident edge count (parallel in/out edges to one transaction count twice).
  std::vector<int> edge_degrees() const {
    std::vector<int> deg(nodes.size(), 0);
    for (const Edge& e : edges) {
      ++deg[e.address_node];
      ++deg[e.tx_node];
    }
    return deg;
  }

  std::vector<std::vector<std::int64_t>> incident_values() const {
    std::vector<std::vector<std::int64_t>> vals(nodes.size());
    for (const Edge& e : edges) {
      vals[e.address_node].push_back(e.value);
      vals[e.tx_node].push_back(e.value);
    }
    return vals;
  }

  std::int64_t total_edge_value() const {
    std::int64_t total = 0;
    for (const Edge& e : edges) total += e.value;
    return total;
  }
};

struct TxWindow {
  int index = 0;
  std::vector<const Transaction*> transactions;  // parent history order
};

// ceil(m/unit) windows; concatenation equals the history; only the last may be
// short.
inline std::vector<TxWindow> slice_history(const AddressRecord& record,
                                           int unit = kDefaultSliceUnit) {
  require(unit >= 1, Errc::config, "slice unit must be >= 1");
  require(!record.history.empty(), Errc::empty_history,
          "address '" + record.address + "' has no transactions");
  std::vector<TxWindow> windows;
  const std::size_t m = record.history.size();
  const std::size_t u = static_cast<std::size_t>(unit);
  windows.reserve((m + u - 1) / u);
  for (std::size_t start = 0; start < m; start += u) {
    TxWindow w;
    w.index = static_cast<int>(start / u);
    const std::size_t end = std::min(m, start + u);
    w.transactions.assign(record.history.begin() + static_cast<std::ptrdiff_t>(start),
                          record.history.begin() + static_cast<std::ptrdiff_t>(end));
    windows.push_back(std::move(w));
  }
  return windows;
}

// Heterogeneous window graph: one transaction node per transaction, one plain
// address node per distinct participating address, one edge per
// (address, transaction, direction) carrying the summed value.
inline AddressGraph build_window_graph(const TxWindow& window, std::string_view target) {
  AddressGraph g;
  g.window_index = window.index;

  std::unordered_map<std::string, int> address_index;
  // (address node, tx node, direction) -> edge index, for duplicate merging
  std::map<std::tuple<int, int, int>, std::size_t> edge_index;

  auto address_node = [&](const std::string& addr) {
    auto it = address_index.find(addr);
    if (it != address_index.end()) return it->second;
    Node n;
    n.kind = NodeKind::PlainAddress;
    n.key = addr;
    n.is_target = (addr == target);
    g.nodes.push_back(std::move(n));
    const int idx = static_cast<int>(g.nodes.size()) - 1;
    address_index.emplace(addr, idx);
    if (g.nodes.back().is_target) g.target_node = idx;
    return idx;
  };

  auto add_edge = [&](int addr_node, int tx_node, Direction dir, std::int64_t value) {
    const auto key = std::make_tuple(addr_node, tx_node, static_cast<int>(dir));
    auto it = edge_index.find(key);
    if (it != edge_index.end()) {
      g.edges[it->second].value += value;
      return;
    }
    g.edges.push_back(Edge{addr_node, tx_node, dir, value});
    edge_index.emplace(key, g.edges.size() - 1);
  };

  for (const Transaction* tx : window.transactions) {
    Node tx_node;
    tx_node.kind = NodeKind::TransactionNode;
    tx_node.key = tx->tx_id;
    g.nodes.push_back(std::move(tx_node));
    const int t = static_cast<int>(g.nodes.size()) - 1;
    for (const TxEntry& e : tx->inputs) add_edge(address_node(e.address), t, Direction::Input, e.value);
    for (const TxEntry& e : tx->outputs) add_edge(address_node(e.address), t, Direction::Output, e.value);
  }

  if (g.target_node < 0)
    fail(Errc::target_missing,
         "target address '" + std::string(target) + "' not in window " +
             std::to_string(window.index));
  return g;
}

// Debug dump: one edge per line "address_key kind | tx_key kind | direction | value",
// preceded by a node table.
inline void dump_graph(const AddressGraph& g, std::ostream& out) {
  out << "# nodes " << g.nodes.size() << " edges " << g.edges.size() << " window "
      << g.window_index << '\n';
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    const Node& n = g.nodes[i];
    out << "node " << i << ' ' << n.key << ' ' << node_kind_name(n.kind)
        << (n.is_target ? " target" : "") << '\n';
  }
  for (const Edge& e : g.edges) {
    const Node& a = g.nodes[e.address_node];
    const Node& t = g.nodes[e.tx_node];
    out << a.key << ' ' << node_kind_name(a.kind) << " | " << t.key << ' '
        << node_kind_name(t.kind) << " | " << direction_name(e.direction) << " | " << e.value
        << '\n';
  }
}

}  // namespace chainlens
