#pragma once

#include <array>
#include <cstdint>
#include <cstdio>
#include <iterator>
#include <string>
#include <utility>
#include <vector>

#include "chainlens/error.hpp"
#include "chainlens/rng.hpp"
#include "chainlens/tx.hpp"

namespace chainlens {

// Behavior-class generation profile. tx_lo/tx_hi position the class's
// transaction-count band inside the spec's global range.
struct ArchetypeParams {
  double tx_lo = 0.0, tx_hi = 1.0;
  std::int64_t value_min = 1, value_max = 1;
  int fan_min = 1, fan_max = 1;               // counterparties per transfer
  int pool_size = 0;                          // recurring counterparties
  double reuse = 0.5;                         // P(counterparty drawn from pool)
  double inbound = 0.5;                       // P(transfer flows toward the target)
  int payout_period = 0;                      // every Nth tx is a pool payout (0 = never)
  double pool_inclusion = 0.9;                // payout membership probability
  std::int64_t step_min = 1, step_max = 600;  // timestamp increment range
};

struct SyntheticSpec {
  int addresses_per_class = 100;
  int tx_count_min = 120;
  int tx_count_max = 300;
  std::uint64_t seed = 42;
  // Exchange: high-frequency mixed in/out, large values, shallow fan.
  // Mining: periodic coinbase receipts plus many-output pool payouts.
  // Gambling: many small bidirectional transfers over few counterparties.
  // Service: heterogeneous mid-volume traffic.
  std::array<ArchetypeParams, kClassCount> archetypes = {{
      {0.55, 1.0, 1'000'000, 5'000'000'000, 1, 3, 30, 0.8, 0.5, 0, 0.9, 1, 20},
      {0.0, 0.45, 10'000'000, 1'000'000'000, 60, 80, 80, 1.0, 1.0, 8, 0.9, 600, 600},
      {0.3, 0.8, 10'000, 10'000'000, 1, 2, 15, 0.95, 0.55, 0, 0.9, 5, 60},
      {0.0, 1.0, 100'000, 100'000'000, 1, 8, 50, 0.6, 0.5, 0, 0.9, 30, 600},
  }};

  void validate() const {
    require(addresses_per_class >= 1, Errc::config, "addresses_per_class must be >= 1");
    require(tx_count_min >= 1 && tx_count_min <= tx_count_max, Errc::config,
            "tx count range must satisfy 1 <= min <= max");
    for (const ArchetypeParams& a : archetypes) {
      require(a.tx_lo >= 0.0 && a.tx_lo <= a.tx_hi && a.tx_hi <= 1.0, Errc::config,
              "archetype tx band must satisfy 0 <= lo <= hi <= 1");
      require(a.value_min >= 1 && a.value_min <= a.value_max, Errc::config,
              "archetype value range must satisfy 1 <= min <= max");
      require(a.fan_min >= 1 && a.fan_min <= a.fan_max, Errc::config,
              "archetype fan range must satisfy 1 <= min <= max");
      require(a.step_min >= 1 && a.step_min <= a.step_max, Errc::config,
              "archetype step range must satisfy 1 <= min <= max");
    }
  }
};

namespace detail {

inline std::string class_prefix(BehaviorClass c) {
  switch (c) {
    case BehaviorClass::Exchange: return "ex";
    case BehaviorClass::Mining: return "mi";
    case BehaviorClass::Gambling: return "ga";
    case BehaviorClass::Service: return "sv";
  }
  fail(Errc::bad_label, "unknown class");
}

inline std::string zero_pad(long long v, int width) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%0*lld", width, v);
  return buf;
}

// One address's history. Streams are seeded per (class, address) so output
// is independent of generation interleaving.
class AddressGenerator {
 public:
  AddressGenerator(const SyntheticSpec& spec, BehaviorClass cls, int index)
      : spec_(spec),
        params_(spec.archetypes[static_cast<std::size_t>(cls)]),
        rng_(derive_seed(spec.seed, static_cast<std::uint64_t>(cls),
                         static_cast<std::uint64_t>(index))),
        target_(class_prefix(cls) + zero_pad(index, 4)),
        cls_(cls) {
    for (int p = 0; p < params_.pool_size; ++p)
      pool_.push_back(target_ + "_p" + zero_pad(p, 3));
  }

  const std::string& target() const { return target_; }

  std::vector<Transaction> generate() {
    const double span = static_cast<double>(spec_.tx_count_max - spec_.tx_count_min);
    const int lo = spec_.tx_count_min + static_cast<int>(params_.tx_lo * span);
    const int hi = spec_.tx_count_min + static_cast<int>(params_.tx_hi * span);
    const int count = static_cast<int>(rng_.uniform_int(lo, hi));

    std::vector<Transaction> txs;
    txs.reserve(static_cast<std::size_t>(count));
    // Epoch-scale base plus a per-address offset; only relative order matters.
    std::int64_t clock = 1'600'000'000 +
                         static_cast<std::int64_t>(rng_.uniform_int(0, 100'000'000));
    for (int j = 0; j < count; ++j) {
      clock += rng_.uniform_int(params_.step_min, params_.step_max);
      txs.push_back(make_tx(j, clock));
    }
    return txs;
  }

 private:
  std::int64_t draw_value() {
    return static_cast<std::int64_t>(rng_.log_uniform(static_cast<double>(params_.value_min),
                                                      static_cast<double>(params_.value_max)));
  }

  std::string counterparty() {
    if (!pool_.empty() && rng_.chance(params_.reuse)) return pool_[rng_.index(pool_.size())];
    return target_ + "_f" + zero_pad(fresh_counter_++, 6);
  }

  Transaction make_tx(int j, std::int64_t clock) {
    Transaction tx;
    tx.tx_id = target_ + "_t" + zero_pad(j, 6);
    tx.timestamp = clock;
    tx.block_height = clock / 600;

    if (cls_ == BehaviorClass::Mining) {
      if (params_.payout_period > 0 && (j + 1) % params_.payout_period == 0) {
        // Pool payout: target funds one many-output member distribution.
        tx.inputs.push_back({target_, draw_value()});
        for (const std::string& member : pool_)
          if (rng_.chance(params_.pool_inclusion)) tx.outputs.push_back({member, draw_value()});
        if (tx.outputs.empty()) tx.outputs.push_back({pool_.front(), draw_value()});
      } else {
        // Coinbase reward receipt.
        tx.outputs.push_back({target_, draw_value()});
      }
      return tx;
    }

    const int fan = static_cast<int>(rng_.uniform_int(params_.fan_min, params_.fan_max));
    if (rng_.chance(params_.inbound)) {
      for (int f = 0; f < fan; ++f) tx.inputs.push_back({counterparty(), draw_value()});
      tx.outputs.push_back({target_, draw_value()});
      if (rng_.chance(0.3)) tx.outputs.push_back({counterparty(), draw_value()});
    } else {
      tx.inputs.push_back({target_, draw_value()});
      for (int f = 0; f < fan; ++f) tx.outputs.push_back({counterparty(), draw_value()});
    }
    return tx;
  }

  const SyntheticSpec& spec_;
  const ArchetypeParams& params_;
  Rng rng_;
  std::string target_;
  BehaviorClass cls_;
  std::vector<std::string> pool_;
  long long fresh_counter_ = 0;
};

}  // namespace detail

// Pure function of the spec: addresses_per_class targets per class, each with
// a history drawn from its class archetype.
inline std::pair<std::vector<Transaction>, LabelMap> generate_synthetic_dataset(
    const SyntheticSpec& spec) {
  spec.validate();
  std::vector<Transaction> transactions;
  LabelMap labels;
  for (int c = 0; c < kClassCount; ++c) {
    const BehaviorClass cls = static_cast<BehaviorClass>(c);
    for (int i = 0; i < spec.addresses_per_class; ++i) {
      detail::AddressGenerator gen(spec, cls, i);
      labels.emplace(gen.target(), cls);
      std::vector<Transaction> txs = gen.generate();
      transactions.insert(transactions.end(), std::make_move_iterator(txs.begin()),
                          std::make_move_iterator(txs.end()));
    }
  }
  return {std::move(transactions), std::move(labels)};
}

}  // namespace chainlens
