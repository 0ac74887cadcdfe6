#pragma once

#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <type_traits>
#include <sstream>
#include <string>
#include <vector>

#include "chainlens/centrality.hpp"
#include "chainlens/compress.hpp"
#include "chainlens/error.hpp"
#include "chainlens/gfn.hpp"
#include "chainlens/nn.hpp"
#include "chainlens/synthetic.hpp"

namespace chainlens {

struct PipelineConfig {
  std::string transactions_path = "work/synth/transactions.jsonl";
  std::string labels_path = "work/synth/labels.jsonl";
  std::string work_dir = "work";
  int slice_unit = 100;
  double train_fraction = 0.8;
  std::uint64_t seed = 42;
  std::size_t max_seq_len = 64;
  int cls_hidden = 64;

  CompressionConfig compression;
  CentralityConfig centrality;
  GfnConfig gfn;
  TrainConfig gfn_train{.learning_rate = 1e-3, .epochs = 20, .batch_size = 16};
  TrainConfig cls_train{.learning_rate = 1e-3, .epochs = 80, .batch_size = 8};
  SyntheticSpec synth;

  void validate() const {
    require(!work_dir.empty(), Errc::config, "work_dir must not be empty");
    require(slice_unit >= 1, Errc::config, "slice_unit must be >= 1");
    require(train_fraction > 0.0 && train_fraction < 1.0, Errc::config,
            "train_fraction must be in (0, 1)");
    require(max_seq_len >= 1, Errc::config, "max_seq_len must be >= 1");
    require(cls_hidden >= 1, Errc::config, "cls_hidden must be >= 1");
    compression.validate();
    centrality.validate();
    gfn.validate();
    gfn_train.validate();
    cls_train.validate();
    synth.validate();
  }
};

namespace detail {

// `key = value` lines; '#' starts a comment; blank lines skipped.
inline std::map<std::string, std::string> parse_key_values(std::istream& in) {
  std::map<std::string, std::string> kv;
  std::string line;
  int line_no = 0;
  auto trim = [](std::string s) {
    const char* ws = " \t\r";
    const auto a = s.find_first_not_of(ws);
    if (a == std::string::npos) return std::string();
    const auto b = s.find_last_not_of(ws);
    return s.substr(a, b - a + 1);
  };
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    require(eq != std::string::npos, Errc::config,
            "config line " + std::to_string(line_no) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    require(!key.empty(), Errc::config,
            "config line " + std::to_string(line_no) + ": empty key");
    require(!kv.count(key), Errc::config,
            "config line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    kv.emplace(key, value);
  }
  return kv;
}

class ConfigReader {
 public:
  explicit ConfigReader(std::map<std::string, std::string> kv) : kv_(std::move(kv)) {}

  void get(const std::string& key, std::string& out) {
    if (auto v = take(key)) out = *v;
  }
  template <typename T>
    requires std::is_integral_v<T>
  void get(const std::string& key, T& out) {
    auto v = take(key);
    if (!v) return;
    if constexpr (std::is_signed_v<T>) {
      const long long n = to_int(key, *v);
      require(n >= std::numeric_limits<T>::min() && n <= std::numeric_limits<T>::max(),
              Errc::config, "config key '" + key + "': out of range");
      out = static_cast<T>(n);
    } else {
      try {
        std::size_t pos = 0;
        const unsigned long long n = std::stoull(*v, &pos);
        require(pos == v->size() && v->front() != '-', Errc::config,
                "config key '" + key + "': not an unsigned integer: '" + *v + "'");
        require(n <= std::numeric_limits<T>::max(), Errc::config,
                "config key '" + key + "': out of range");
        out = static_cast<T>(n);
      } catch (const Error&) {
        throw;
      } catch (...) {
        fail(Errc::config, "config key '" + key + "': not an unsigned integer: '" + *v + "'");
      }
    }
  }
  void get(const std::string& key, double& out) {
    if (auto v = take(key)) {
      try {
        std::size_t pos = 0;
        out = std::stod(*v, &pos);
        require(pos == v->size(), Errc::config, "config key '" + key + "': trailing junk");
      } catch (const Error&) {
        throw;
      } catch (...) {
        fail(Errc::config, "config key '" + key + "': not a number: '" + *v + "'");
      }
    }
  }
  void get(const std::string& key, OptimizerKind& out) {
    if (auto v = take(key)) {
      if (*v == "sgd") out = OptimizerKind::Sgd;
      else if (*v == "adam") out = OptimizerKind::Adam;
      else fail(Errc::config, "config key '" + key + "': expected sgd or adam, got '" + *v + "'");
    }
  }

  void finish() const {
    for (const auto& [key, value] : kv_)
      if (!consumed_.count(key)) fail(Errc::config, "unknown config key '" + key + "'");
  }

 private:
  std::optional<std::string> take(const std::string& key) {
    auto it = kv_.find(key);
    if (it == kv_.end()) return std::nullopt;
    consumed_.insert(key);
    return it->second;
  }

  long long to_int(const std::string& key, const std::string& v) {
    try {
      std::size_t pos = 0;
      const long long n = std::stoll(v, &pos);
      require(pos == v.size(), Errc::config, "config key '" + key + "': trailing junk");
      return n;
    } catch (const Error&) {
      throw;
    } catch (...) {
      fail(Errc::config, "config key '" + key + "': not an integer: '" + v + "'");
    }
  }

  std::map<std::string, std::string> kv_;
  std::set<std::string> consumed_;
};

}  // namespace detail

inline PipelineConfig parse_config(std::istream& in) {
  detail::ConfigReader r(detail::parse_key_values(in));
  PipelineConfig c;
  r.get("transactions", c.transactions_path);
  r.get("labels", c.labels_path);
  r.get("work_dir", c.work_dir);
  r.get("slice_unit", c.slice_unit);
  r.get("train_fraction", c.train_fraction);
  r.get("seed", c.seed);
  r.get("max_seq_len", c.max_seq_len);
  r.get("psi", c.compression.psi);
  r.get("sigma", c.compression.sigma);
  r.get("alpha", c.centrality.alpha);
  r.get("pr_tolerance", c.centrality.tolerance);
  r.get("pr_max_iters", c.centrality.max_iters);
  r.get("k", c.gfn.k);
  r.get("node_hidden", c.gfn.node_hidden);
  r.get("embed_dim", c.gfn.embed_dim);
  r.get("gfn.learning_rate", c.gfn_train.learning_rate);
  r.get("gfn.epochs", c.gfn_train.epochs);
  r.get("gfn.batch_size", c.gfn_train.batch_size);
  r.get("gfn.optimizer", c.gfn_train.optimizer);
  r.get("cls.learning_rate", c.cls_train.learning_rate);
  r.get("cls.epochs", c.cls_train.epochs);
  r.get("cls.batch_size", c.cls_train.batch_size);
  r.get("cls.optimizer", c.cls_train.optimizer);
  r.get("cls.hidden", c.cls_hidden);
  r.get("synth.addresses_per_class", c.synth.addresses_per_class);
  r.get("synth.tx_count_min", c.synth.tx_count_min);
  r.get("synth.tx_count_max", c.synth.tx_count_max);
  r.finish();
  c.validate();
  return c;
}

inline PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), Errc::io, "cannot open config file '" + path + "'");
  return parse_config(in);
}

}  // namespace chainlens
