#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <tuple>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "chainlens/error.hpp"
#include "chainlens/rng.hpp"

namespace chainlens {

// One UTXO-model transfer. Values are integer satoshis end to end; downstream
// statistics convert to double.
struct TxEntry {
  std::string address;
  std::int64_t value = 0;  // satoshis, >= 0

  friend bool operator==(const TxEntry&, const TxEntry&) = default;
};

struct Transaction {
  std::string tx_id;
  std::int64_t timestamp = 0;     // seconds since epoch
  std::int64_t block_height = 0;  // >= 0
  std::vector<TxEntry> inputs;    // empty only for coinbase
  std::vector<TxEntry> outputs;   // never empty

  bool coinbase() const { return inputs.empty(); }

  friend bool operator==(const Transaction&, const Transaction&) = default;
};

// Chronological order key: ties on timestamp break by block height, then id.
inline bool tx_order_before(const Transaction& a, const Transaction& b) {
  return std::tie(a.timestamp, a.block_height, a.tx_id) <
         std::tie(b.timestamp, b.block_height, b.tx_id);
}

enum class BehaviorClass : int { Exchange = 0, Mining = 1, Gambling = 2, Service = 3 };

inline constexpr int kClassCount = 4;

inline const char* class_name(BehaviorClass c) {
  switch (c) {
    case BehaviorClass::Exchange: return "exchange";
    case BehaviorClass::Mining: return "mining";
    case BehaviorClass::Gambling: return "gambling";
    case BehaviorClass::Service: return "service";
  }
  return "unknown";
}

inline BehaviorClass parse_behavior_class(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "exchange") return BehaviorClass::Exchange;
  if (lower == "mining") return BehaviorClass::Mining;
  if (lower == "gambling") return BehaviorClass::Gambling;
  if (lower == "service") return BehaviorClass::Service;
  fail(Errc::bad_label, "unknown behavior class '" + std::string(name) + "'");
}

struct AddressRecord {
  std::string address;
  std::vector<const Transaction*> history;  // sorted by (timestamp, block, id)
  std::optional<BehaviorClass> label;
};

using LabelMap = std::map<std::string, BehaviorClass>;

// ---------------------------------------------------------------------------
// Wire format: newline-delimited JSON objects, UTF-8.

namespace detail {

inline std::vector<TxEntry> entries_from_json(const nlohmann::json& arr,
                                              std::size_t line_no,
                                              const char* side) {
  std::vector<TxEntry> out;
  if (!arr.is_array())
    fail(Errc::parse, "line " + std::to_string(line_no) + ": " + side + " is not an array");
  out.reserve(arr.size());
  for (const auto& item : arr) {
    if (!item.is_object() || !item.contains("address") || !item.contains("value"))
      fail(Errc::parse,
           "line " + std::to_string(line_no) + ": " + side + " entry missing address/value");
    TxEntry e;
    e.address = item.at("address").get<std::string>();
    e.value = item.at("value").get<std::int64_t>();
    if (e.value < 0)
      fail(Errc::parse, "line " + std::to_string(line_no) + ": negative value");
    out.push_back(std::move(e));
  }
  return out;
}

inline nlohmann::json entries_to_json(const std::vector<TxEntry>& entries) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& e : entries) arr.push_back({{"address", e.address}, {"value", e.value}});
  return arr;
}

}  // namespace detail

inline Transaction parse_transaction_line(const std::string& line, std::size_t line_no) {
  nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object())
    fail(Errc::parse, "line " + std::to_string(line_no) + ": not a JSON object");
  for (const char* key : {"tx_id", "timestamp", "block_height", "inputs", "outputs"})
    if (!j.contains(key))
      fail(Errc::parse, "line " + std::to_string(line_no) + ": missing key '" + key + "'");

  Transaction tx;
  tx.tx_id = j.at("tx_id").get<std::string>();
  if (tx.tx_id.empty()) fail(Errc::parse, "line " + std::to_string(line_no) + ": empty tx_id");
  tx.timestamp = j.at("timestamp").get<std::int64_t>();
  tx.block_height = j.at("block_height").get<std::int64_t>();
  if (tx.block_height < 0)
    fail(Errc::parse, "line " + std::to_string(line_no) + ": negative block_height");
  tx.inputs = detail::entries_from_json(j.at("inputs"), line_no, "inputs");
  tx.outputs = detail::entries_from_json(j.at("outputs"), line_no, "outputs");
  if (tx.outputs.empty())
    fail(Errc::parse, "line " + std::to_string(line_no) + ": transaction has no outputs");
  return tx;
}

inline std::string serialize_transaction(const Transaction& tx) {
  nlohmann::json j{{"tx_id", tx.tx_id},
                   {"timestamp", tx.timestamp},
                   {"block_height", tx.block_height},
                   {"inputs", detail::entries_to_json(tx.inputs)},
                   {"outputs", detail::entries_to_json(tx.outputs)}};
  return j.dump();
}

// One Transaction per well-formed line, order preserved.
inline std::vector<Transaction> parse_transactions(std::istream& in) {
  std::vector<Transaction> out;
  std::unordered_set<std::string> seen_ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    Transaction tx = parse_transaction_line(line, line_no);
    if (!seen_ids.insert(tx.tx_id).second)
      fail(Errc::duplicate_id,
           "line " + std::to_string(line_no) + ": duplicate tx_id '" + tx.tx_id + "'");
    out.push_back(std::move(tx));
  }
  return out;
}

inline void serialize_transactions(const std::vector<Transaction>& txs, std::ostream& out) {
  for (const auto& tx : txs) out << serialize_transaction(tx) << '\n';
}

// Labels: one {address, class} object per line; duplicates must agree.
inline LabelMap load_address_labels(std::istream& in) {
  LabelMap labels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("address") || !j.contains("class"))
      fail(Errc::parse, "line " + std::to_string(line_no) + ": bad label record");
    const std::string address = j.at("address").get<std::string>();
    const BehaviorClass cls = parse_behavior_class(j.at("class").get<std::string>());
    auto [it, inserted] = labels.emplace(address, cls);
    if (!inserted && it->second != cls)
      fail(Errc::label_conflict, "line " + std::to_string(line_no) + ": address '" + address +
                                     "' labeled both " + class_name(it->second) + " and " +
                                     class_name(cls));
  }
  return labels;
}

inline void serialize_labels(const LabelMap& labels, std::ostream& out) {
  for (const auto& [address, cls] : labels) {
    nlohmann::json j{{"address", address}, {"class", class_name(cls)}};
    out << j.dump() << '\n';
  }
}

// ---------------------------------------------------------------------------
// Transaction store: immutable once built, safe for concurrent readers.

class TxStore {
 public:
  explicit TxStore(std::vector<Transaction> txs) : txs_(std::move(txs)) {
    std::unordered_set<std::string_view> seen;
    seen.reserve(txs_.size());
    for (std::size_t i = 0; i < txs_.size(); ++i) {
      const Transaction& tx = txs_[i];
      if (!seen.insert(tx.tx_id).second)
        fail(Errc::duplicate_id, "duplicate tx_id '" + tx.tx_id + "' in store");
      auto note = [&](const std::string& addr) {
        auto& list = by_address_[addr];
        if (list.empty() || list.back() != i) list.push_back(i);
      };
      for (const auto& e : tx.inputs) note(e.address);
      for (const auto& e : tx.outputs) note(e.address);
    }
  }

  const std::vector<Transaction>& transactions() const { return txs_; }

  // Exactly the transactions where the address appears on either side,
  // chronologically sorted. Unknown address yields an empty history.
  AddressRecord history_of(const std::string& address) const {
    AddressRecord rec;
    rec.address = address;
    auto it = by_address_.find(address);
    if (it != by_address_.end()) {
      rec.history.reserve(it->second.size());
      for (std::size_t idx : it->second) rec.history.push_back(&txs_[idx]);
      std::sort(rec.history.begin(), rec.history.end(),
                [](const Transaction* a, const Transaction* b) { return tx_order_before(*a, *b); });
    }
    return rec;
  }

 private:
  std::vector<Transaction> txs_;
  std::unordered_map<std::string, std::vector<std::size_t>> by_address_;
};

inline AddressRecord collect_address_history(const std::string& address, const TxStore& store) {
  return store.history_of(address);
}

// ---------------------------------------------------------------------------
// Stratified split.

struct SplitResult {
  std::vector<std::string> train;  // sorted
  std::vector<std::string> test;   // sorted
};

// Per-class train count = floor(fraction * class size); union disjoint and
// complete; deterministic given seed.
inline SplitResult stratified_split(const LabelMap& labels, double fraction, std::uint64_t seed) {
  require(fraction > 0.0 && fraction < 1.0, Errc::config, "train fraction must be in (0, 1)");
  require(!labels.empty(), Errc::degenerate_class, "label map is empty");

  std::array<std::vector<std::string>, kClassCount> per_class;
  for (const auto& [address, cls] : labels)
    per_class[static_cast<int>(cls)].push_back(address);  // map order: already sorted

  for (int c = 0; c < kClassCount; ++c)
    require(!per_class[c].empty(), Errc::degenerate_class,
            std::string("class '") + class_name(static_cast<BehaviorClass>(c)) +
                "' has no addresses");

  Rng rng(seed);
  SplitResult out;
  for (int c = 0; c < kClassCount; ++c) {
    auto& members = per_class[c];
    rng.shuffle(members);
    const std::size_t train_n =
        static_cast<std::size_t>(fraction * static_cast<double>(members.size()));
    for (std::size_t i = 0; i < members.size(); ++i)
      (i < train_n ? out.train : out.test).push_back(members[i]);
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

}  // namespace chainlens
