#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "chainlens/centrality.hpp"
#include "chainlens/compress.hpp"
#include "chainlens/config.hpp"
#include "chainlens/error.hpp"
#include "chainlens/features.hpp"
#include "chainlens/gfn.hpp"
#include "chainlens/graph.hpp"
#include "chainlens/lstm.hpp"
#include "chainlens/metrics.hpp"
#include "chainlens/parallel.hpp"
#include "chainlens/rng.hpp"
#include "chainlens/synthetic.hpp"
#include "chainlens/tx.hpp"

namespace chainlens {

// ---------------------------------------------------------------------------
// Artifacts.

struct ArtifactPaths {
  std::filesystem::path work;
  std::filesystem::path synth_transactions, synth_labels;
  std::filesystem::path ingest_transactions, ingest_labels, split;
  std::filesystem::path slices, timing;
  std::filesystem::path gfn_model, gfn_loss;
  std::filesystem::path embeddings;
  std::filesystem::path cls_model, cls_loss;
  std::filesystem::path predictions;
  std::filesystem::path metrics;
  std::filesystem::path digests;

  static ArtifactPaths from(const PipelineConfig& config) {
    ArtifactPaths p;
    p.work = config.work_dir;
    p.synth_transactions = p.work / "synth" / "transactions.jsonl";
    p.synth_labels = p.work / "synth" / "labels.jsonl";
    p.ingest_transactions = p.work / "ingest" / "transactions.jsonl";
    p.ingest_labels = p.work / "ingest" / "labels.jsonl";
    p.split = p.work / "ingest" / "split.txt";
    p.slices = p.work / "graphs" / "slices.jsonl";
    p.timing = p.work / "graphs" / "timing.txt";
    p.gfn_model = p.work / "models" / "gfn.bin";
    p.gfn_loss = p.work / "models" / "gfn_loss.txt";
    p.embeddings = p.work / "embed" / "embeddings.jsonl";
    p.cls_model = p.work / "models" / "lstm.bin";
    p.cls_loss = p.work / "models" / "lstm_loss.txt";
    p.predictions = p.work / "predict" / "predictions.jsonl";
    p.metrics = p.work / "evaluate" / "metrics.txt";
    p.digests = p.work / "digests.txt";
    return p;
  }
};

inline constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ull;
inline constexpr std::uint64_t kFnvPrime = 0x100000001b3ull;

inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = kFnvOffset;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= kFnvPrime;
  }
  return h;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), Errc::io, "cannot open '" + path.string() + "' for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  require(!in.bad(), Errc::io, "read failed for '" + path.string() + "'");
  return std::move(buf).str();
}

inline void write_file(const std::filesystem::path& path, std::string_view content) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(out.good(), Errc::io, "cannot open '" + path.string() + "' for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  require(out.good(), Errc::io, "write failed for '" + path.string() + "'");
}

// Digest index over all deterministic artifacts present on disk. The measured
// timing file is diagnostic (wall clock) and deliberately not covered.
inline void update_digests(const ArtifactPaths& p) {
  const std::array<const std::filesystem::path*, 12> covered = {
      &p.synth_transactions, &p.synth_labels, &p.ingest_transactions, &p.ingest_labels,
      &p.split,              &p.slices,       &p.gfn_model,           &p.gfn_loss,
      &p.embeddings,         &p.cls_model,    &p.cls_loss,            &p.predictions,
  };
  std::string out;
  std::vector<std::pair<std::string, std::uint64_t>> rows;
  for (const auto* path : covered)
    if (std::filesystem::exists(*path))
      rows.emplace_back(std::filesystem::relative(*path, p.work).generic_string(),
                        fnv1a64(read_file(*path)));
  if (std::filesystem::exists(p.metrics))
    rows.emplace_back(std::filesystem::relative(p.metrics, p.work).generic_string(),
                      fnv1a64(read_file(p.metrics)));
  std::sort(rows.begin(), rows.end());
  for (const auto& [name, digest] : rows) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(digest));
    out += name + " " + buf + "\n";
  }
  write_file(p.digests, out);
}

// ---------------------------------------------------------------------------
// Stages.

enum class Stage { Synth, Ingest, BuildGraphs, TrainGfn, Embed, TrainCls, Predict, Evaluate };

inline const char* stage_name(Stage s) {
  switch (s) {
    case Stage::Synth: return "synth";
    case Stage::Ingest: return "ingest";
    case Stage::BuildGraphs: return "build-graphs";
    case Stage::TrainGfn: return "train-gfn";
    case Stage::Embed: return "embed";
    case Stage::TrainCls: return "train-cls";
    case Stage::Predict: return "predict";
    case Stage::Evaluate: return "evaluate";
  }
  return "unknown";
}

inline Stage parse_stage(std::string_view name) {
  for (Stage s : {Stage::Synth, Stage::Ingest, Stage::BuildGraphs, Stage::TrainGfn, Stage::Embed,
                  Stage::TrainCls, Stage::Predict, Stage::Evaluate})
    if (name == stage_name(s)) return s;
  fail(Errc::config, "unknown stage '" + std::string(name) + "'");
}

namespace detail {

// Per-stage RNG stream tags; all stage seeds derive from the one config seed.
inline constexpr std::uint64_t kSynthTag = 0x73796e7468ull;
inline constexpr std::uint64_t kSplitTag = 0x73706c6974ull;
inline constexpr std::uint64_t kGfnTag = 0x67666eull;
inline constexpr std::uint64_t kClsTag = 0x636c73ull;

inline void require_artifact(const std::filesystem::path& path, const char* producer) {
  require(std::filesystem::exists(path), Errc::dependency,
          "missing artifact '" + path.string() + "'; run " + producer + " first");
}

}  // namespace detail

inline void run_synth(const PipelineConfig& config) {
  const ArtifactPaths p = ArtifactPaths::from(config);
  SyntheticSpec spec = config.synth;
  spec.seed = derive_seed(config.seed, detail::kSynthTag);
  auto [transactions, labels] = generate_synthetic_dataset(spec);
  std::ostringstream tx_out;
  serialize_transactions(transactions, tx_out);
  write_file(p.synth_transactions, tx_out.str());
  std::ostringstream label_out;
  serialize_labels(labels, label_out);
  write_file(p.synth_labels, label_out.str());
  update_digests(p);
}

// Validates the input records, attaches labels, computes the stratified
// split, and writes the canonical copies all later stages read.
inline void run_ingest(const PipelineConfig& config) {
  const ArtifactPaths p = ArtifactPaths::from(config);
  require(std::filesystem::exists(config.transactions_path), Errc::dependency,
          "missing transactions file '" + config.transactions_path +
              "'; run synth first or point 'transactions' at your data");
  require(std::filesystem::exists(config.labels_path), Errc::dependency,
          "missing labels file '" + config.labels_path +
              "'; run synth first or point 'labels' at your data");

  std::ifstream tx_in(config.transactions_path);
  require(tx_in.good(), Errc::io, "cannot open '" + config.transactions_path + "'");
  std::vector<Transaction> transactions = parse_transactions(tx_in);
  require(!transactions.empty(), Errc::empty_input,
          "no transactions in '" + config.transactions_path + "'");

  std::ifstream label_in(config.labels_path);
  require(label_in.good(), Errc::io, "cannot open '" + config.labels_path + "'");
  const LabelMap labels = load_address_labels(label_in);
  require(!labels.empty(), Errc::empty_input, "no labels in '" + config.labels_path + "'");

  const TxStore store(std::move(transactions));
  for (const auto& [address, cls] : labels)
    require(!store.history_of(address).history.empty(), Errc::empty_history,
            "labeled address '" + address + "' has no transactions");

  const SplitResult split =
      stratified_split(labels, config.train_fraction, derive_seed(config.seed, detail::kSplitTag));

  std::ostringstream tx_out;
  serialize_transactions(store.transactions(), tx_out);
  write_file(p.ingest_transactions, tx_out.str());
  std::ostringstream label_out;
  serialize_labels(labels, label_out);
  write_file(p.ingest_labels, label_out.str());

  std::string split_out;
  std::map<std::string, const char*> roles;
  for (const std::string& a : split.train) roles.emplace(a, "train");
  for (const std::string& a : split.test) roles.emplace(a, "test");
  for (const auto& [address, role] : roles) split_out += address + " " + role + "\n";
  write_file(p.split, split_out);
  update_digests(p);
}

namespace detail {

struct SliceRecord {
  std::string address;
  int window_index = 0;
  BehaviorClass label = BehaviorClass::Exchange;
  AddressGraph graph;           // compressed
  Eigen::MatrixXd features;     // node x 26
};

inline nlohmann::json slice_to_json(const SliceRecord& rec) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const Node& n : rec.graph.nodes) {
    nlohmann::json jn{{"kind", node_kind_name(n.kind)}, {"key", n.key}};
    if (n.is_target) jn["target"] = true;
    nodes.push_back(std::move(jn));
  }
  nlohmann::json edges = nlohmann::json::array();
  for (const Edge& e : rec.graph.edges)
    edges.push_back({e.address_node, e.tx_node, static_cast<int>(e.direction), e.value});
  nlohmann::json features = nlohmann::json::array();
  for (Eigen::Index r = 0; r < rec.features.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < rec.features.cols(); ++c) row.push_back(rec.features(r, c));
    features.push_back(std::move(row));
  }
  return nlohmann::json{{"address", rec.address},
                        {"window_index", rec.window_index},
                        {"label", class_name(rec.label)},
                        {"nodes", std::move(nodes)},
                        {"edges", std::move(edges)},
                        {"features", std::move(features)}};
}

inline SliceRecord slice_from_json(const nlohmann::json& j, std::size_t line_no) {
  auto bad = [&](const std::string& what) {
    fail(Errc::parse, "slices line " + std::to_string(line_no) + ": " + what);
  };
  if (!j.is_object()) bad("not an object");
  SliceRecord rec;
  rec.address = j.at("address").get<std::string>();
  rec.window_index = j.at("window_index").get<int>();
  rec.label = parse_behavior_class(j.at("label").get<std::string>());
  rec.graph.window_index = rec.window_index;
  for (const auto& jn : j.at("nodes")) {
    Node n;
    n.kind = parse_node_kind(jn.at("kind").get<std::string>());
    n.key = jn.at("key").get<std::string>();
    n.is_target = jn.value("target", false);
    if (n.is_target) rec.graph.target_node = static_cast<int>(rec.graph.nodes.size());
    rec.graph.nodes.push_back(std::move(n));
  }
  for (const auto& je : j.at("edges")) {
    if (!je.is_array() || je.size() != 4) bad("edge is not a 4-element array");
    Edge e;
    e.address_node = je.at(0).get<int>();
    e.tx_node = je.at(1).get<int>();
    e.direction = je.at(2).get<int>() == 0 ? Direction::Input : Direction::Output;
    e.value = je.at(3).get<std::int64_t>();
    const int n = static_cast<int>(rec.graph.nodes.size());
    if (e.address_node < 0 || e.address_node >= n || e.tx_node < 0 || e.tx_node >= n)
      bad("edge node index out of range");
    rec.graph.edges.push_back(e);
  }
  const auto& jf = j.at("features");
  rec.features.resize(static_cast<Eigen::Index>(jf.size()), kNodeFeatureWidth);
  if (jf.size() != rec.graph.nodes.size()) bad("feature row count != node count");
  for (Eigen::Index r = 0; r < rec.features.rows(); ++r) {
    const auto& row = jf.at(static_cast<std::size_t>(r));
    if (!row.is_array() || row.size() != static_cast<std::size_t>(kNodeFeatureWidth))
      bad("feature row has wrong width");
    for (Eigen::Index c = 0; c < kNodeFeatureWidth; ++c)
      rec.features(r, c) = row.at(static_cast<std::size_t>(c)).get<double>();
  }
  if (rec.graph.target_node < 0) bad("no target node");
  return rec;
}

inline std::vector<SliceRecord> load_slices(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(in.good(), Errc::io, "cannot open '" + path.string() + "'");
  std::vector<SliceRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded())
      fail(Errc::parse, "slices line " + std::to_string(line_no) + ": bad JSON");
    out.push_back(slice_from_json(j, line_no));
  }
  require(!out.empty(), Errc::empty_input, "no slice records in '" + path.string() + "'");
  return out;
}

// address -> train? (true) / test (false)
inline std::map<std::string, bool> load_split(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(in.good(), Errc::io, "cannot open '" + path.string() + "'");
  std::map<std::string, bool> roles;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto space = line.rfind(' ');
    require(space != std::string::npos, Errc::parse,
            "split line " + std::to_string(line_no) + ": expected '<address> train|test'");
    const std::string address = line.substr(0, space);
    const std::string role = line.substr(space + 1);
    require(role == "train" || role == "test", Errc::parse,
            "split line " + std::to_string(line_no) + ": unknown role '" + role + "'");
    roles[address] = (role == "train");
  }
  require(!roles.empty(), Errc::empty_input, "empty split file '" + path.string() + "'");
  return roles;
}

inline LabelMap load_labels_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(in.good(), Errc::io, "cannot open '" + path.string() + "'");
  return load_address_labels(in);
}

}  // namespace detail

// Slices each labeled address's history, builds and compresses the window
// graphs, augments node features, and persists one record per slice plus the
// measured construction-timing report.
inline void run_build_graphs(const PipelineConfig& config) {
  const ArtifactPaths p = ArtifactPaths::from(config);
  detail::require_artifact(p.ingest_transactions, "ingest");
  detail::require_artifact(p.ingest_labels, "ingest");
  detail::require_artifact(p.split, "ingest");

  std::ifstream tx_in(p.ingest_transactions);
  require(tx_in.good(), Errc::io, "cannot open '" + p.ingest_transactions.string() + "'");
  const TxStore store(parse_transactions(tx_in));
  const LabelMap labels = detail::load_labels_file(p.ingest_labels);

  std::vector<std::pair<std::string, BehaviorClass>> targets(labels.begin(), labels.end());
  std::vector<std::vector<detail::SliceRecord>> per_address(targets.size());
  std::vector<std::array<double, 4>> timings(targets.size());

  parallel_for(targets.size(), [&](std::size_t i) {
    using clock = std::chrono::steady_clock;
    const auto& [address, label] = targets[i];
    std::array<double, 4> stage_seconds{};
    auto timed = [&stage_seconds](int stage, auto&& fn) {
      const auto t0 = clock::now();
      auto result = fn();
      stage_seconds[static_cast<std::size_t>(stage)] +=
          std::chrono::duration<double>(clock::now() - t0).count();
      return result;
    };

    const AddressRecord record = store.history_of(address);
    const std::vector<TxWindow> windows = slice_history(record, config.slice_unit);
    for (const TxWindow& window : windows) {
      detail::SliceRecord rec;
      rec.address = address;
      rec.window_index = window.index;
      rec.label = label;
      AddressGraph original =
          timed(0, [&] { return build_window_graph(window, address); });
      AddressGraph single = timed(1, [&] { return compress_single_tx_addresses(original); });
      rec.graph =
          timed(2, [&] { return compress_multi_tx_addresses(single, config.compression); });
      rec.features =
          timed(3, [&] { return assemble_node_features(rec.graph, config.centrality); });
      per_address[i].push_back(std::move(rec));
    }
    timings[i] = stage_seconds;
  });

  std::string slices_out;
  for (const auto& slices : per_address)
    for (const detail::SliceRecord& rec : slices) slices_out += detail::slice_to_json(rec).dump() + "\n";
  write_file(p.slices, slices_out);
  write_file(p.timing, format_timing(timing_report(timings)));
  update_digests(p);
}

namespace detail {

// Encoder input straight from a stored slice: adjacency from the edges,
// degree column from the stored feature matrix.
inline Eigen::MatrixXd slice_gfn_input(const SliceRecord& rec, int k) {
  const Eigen::Index degree_col = SfeVector::kWidth + 4 + 1;  // after one-hot and target flag
  return augment_features(rec.features, normalized_adjacency(rec.graph),
                          rec.features.col(degree_col), k);
}

inline std::string format_loss_history(const std::vector<double>& history) {
  std::string out;
  for (std::size_t i = 0; i < history.size(); ++i)
    out += "epoch " + std::to_string(i) + " loss " + fixed6(history[i]) + "\n";
  return out;
}

}  // namespace detail

// Pretrains the graph encoder on train-split slices, with each slice carrying
// its address label.
inline void run_train_gfn(const PipelineConfig& config) {
  const ArtifactPaths p = ArtifactPaths::from(config);
  detail::require_artifact(p.slices, "build-graphs");
  detail::require_artifact(p.split, "ingest");

  const std::vector<detail::SliceRecord> slices = detail::load_slices(p.slices);
  const std::map<std::string, bool> roles = detail::load_split(p.split);

  std::vector<std::size_t> train_index;
  for (std::size_t i = 0; i < slices.size(); ++i) {
    auto it = roles.find(slices[i].address);
    require(it != roles.end(), Errc::data,
            "slice address '" + slices[i].address + "' missing from split");
    if (it->second) train_index.push_back(i);
  }
  require(!train_index.empty(), Errc::data, "no train-split slices");

  std::vector<Eigen::MatrixXd> inputs(train_index.size());
  std::vector<int> labels(train_index.size());
  parallel_for(train_index.size(), [&](std::size_t i) {
    const detail::SliceRecord& rec = slices[train_index[i]];
    inputs[i] = detail::slice_gfn_input(rec, config.gfn.k);
    labels[i] = static_cast<int>(rec.label);
  });

  TrainConfig train = config.gfn_train;
  train.seed = derive_seed(config.seed, detail::kGfnTag);
  auto [model, history] = pretrain_gfn(inputs, labels, config.gfn, train);
  std::filesystem::create_directories(p.gfn_model.parent_path());
  save_gfn(p.gfn_model.string(), model);
  write_file(p.gfn_loss, detail::format_loss_history(history));
  update_digests(p);
}

// Encodes every slice with the frozen encoder.
inline void run_embed(const PipelineConfig& config) {
  const ArtifactPaths p = ArtifactPaths::from(config);
  detail::require_artifact(p.slices, "build-graphs");
  detail::require_artifact(p.gfn_model, "train-gfn");

  const std::vector<detail::SliceRecord> slices = detail::load_slices(p.slices);
  Rng rng(0);
  GfnModel model = make_gfn_model(config.gfn, rng);
  load_gfn(p.gfn_model.string(), model);

  std::vector<Eigen::VectorXd> embeddings(slices.size());
  parallel_for(slices.size(), [&](std::size_t i) {
    embeddings[i] = encode_graph(model, detail::slice_gfn_input(slices[i], config.gfn.k));
  });

  std::string out;
  for (std::size_t i = 0; i < slices.size(); ++i) {
    nlohmann::json vec = nlohmann::json::array();
    for (Eigen::Index c = 0; c < embeddings[i].size(); ++c) vec.push_back(embeddings[i](c));
    nlohmann::json j{{"address", slices[i].address},
                     {"window_index", slices[i].window_index},
                     {"vector", std::move(vec)}};
    out += j.dump() + "\n";
  }
  write_file(p.embeddings, out);
  update_digests(p);
}

namespace detail {

// address -> chronological embedding sequence (by window index).
inline std::map<std::string, std::vector<Eigen::VectorXd>> load_embeddings(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  require(in.good(), Errc::io, "cannot open '" + path.string() + "'");
  std::map<std::string, std::map<int, Eigen::VectorXd>> by_address;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object())
      fail(Errc::parse, "embeddings line " + std::to_string(line_no) + ": bad JSON");
    const std::string address = j.at("address").get<std::string>();
    const int window = j.at("window_index").get<int>();
    const auto& vec = j.at("vector");
    Eigen::VectorXd e(static_cast<Eigen::Index>(vec.size()));
    for (Eigen::Index c = 0; c < e.size(); ++c) e(c) = vec.at(static_cast<std::size_t>(c)).get<double>();
    const bool inserted = by_address[address].emplace(window, std::move(e)).second;
    require(inserted, Errc::duplicate_id,
            "embeddings line " + std::to_string(line_no) + ": duplicate window for '" + address +
                "'");
  }
  require(!by_address.empty(), Errc::empty_input, "no embeddings in '" + path.string() + "'");
  std::map<std::string, std::vector<Eigen::VectorXd>> out;
  for (auto& [address, windows] : by_address) {
    auto& seq = out[address];
    seq.reserve(windows.size());
    for (auto& [window, e] : windows) seq.push_back(std::move(e));
  }
  return out;
}

}  // namespace detail

// Trains the sequence classifier on train-split addresses over the frozen
// encoder's embeddings.
inline void run_train_cls(const PipelineConfig& config) {
  const ArtifactPaths p = ArtifactPaths::from(config);
  detail::require_artifact(p.embeddings, "embed");
  detail::require_artifact(p.split, "ingest");
  detail::require_artifact(p.ingest_labels, "ingest");

  const auto sequences = detail::load_embeddings(p.embeddings);
  const auto roles = detail::load_split(p.split);
  const LabelMap labels = detail::load_labels_file(p.ingest_labels);

  std::vector<SequenceSample> samples;
  for (const auto& [address, seq] : sequences) {
    auto role = roles.find(address);
    require(role != roles.end(), Errc::data, "address '" + address + "' missing from split");
    if (!role->second) continue;
    auto label = labels.find(address);
    require(label != labels.end(), Errc::data, "address '" + address + "' missing from labels");
    samples.push_back({seq, static_cast<int>(label->second)});
  }
  require(!samples.empty(), Errc::data, "no train-split sequences");

  SeqTrainOptions options;
  options.hidden = config.cls_hidden;
  options.class_count = kClassCount;
  options.max_seq_len = config.max_seq_len;
  TrainConfig train = config.cls_train;
  train.seed = derive_seed(config.seed, detail::kClsTag);
  auto [model, history] = train_classifier(samples, options, train);
  std::filesystem::create_directories(p.cls_model.parent_path());
  save_seq_model(p.cls_model.string(), model);
  write_file(p.cls_loss, detail::format_loss_history(history));
  update_digests(p);
}

// Classifies every address's embedding sequence.
inline void run_predict(const PipelineConfig& config) {
  const ArtifactPaths p = ArtifactPaths::from(config);
  detail::require_artifact(p.cls_model, "train-cls");
  detail::require_artifact(p.embeddings, "embed");

  const auto sequences = detail::load_embeddings(p.embeddings);
  require(!sequences.empty(), Errc::empty_input, "no embedding sequences");
  const Eigen::Index embed_dim = sequences.begin()->second.front().size();
  Rng rng(0);
  SeqModel model = make_seq_model(config.cls_hidden, embed_dim, kClassCount, rng);
  load_seq_model(p.cls_model.string(), model);

  std::vector<std::pair<std::string, const std::vector<Eigen::VectorXd>*>> items;
  items.reserve(sequences.size());
  for (const auto& [address, seq] : sequences) items.emplace_back(address, &seq);
  std::vector<Eigen::VectorXd> probs(items.size());
  parallel_for(items.size(), [&](std::size_t i) {
    probs[i] = classify_sequence(model, truncate_recent(*items[i].second, config.max_seq_len));
  });

  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    Eigen::Index best = 0;
    probs[i].maxCoeff(&best);
    nlohmann::json jp = nlohmann::json::array();
    for (Eigen::Index c = 0; c < probs[i].size(); ++c) jp.push_back(probs[i](c));
    nlohmann::json j{{"address", items[i].first},
                     {"predicted", class_name(static_cast<BehaviorClass>(best))},
                     {"probs", std::move(jp)}};
    out += j.dump() + "\n";
  }
  write_file(p.predictions, out);
  update_digests(p);
}

// Scores test-split predictions against the labels.
inline MetricsReport run_evaluate(const PipelineConfig& config) {
  const ArtifactPaths p = ArtifactPaths::from(config);
  detail::require_artifact(p.predictions, "predict");
  detail::require_artifact(p.ingest_labels, "ingest");
  detail::require_artifact(p.split, "ingest");

  const LabelMap labels = detail::load_labels_file(p.ingest_labels);
  const auto roles = detail::load_split(p.split);

  std::ifstream in(p.predictions);
  require(in.good(), Errc::io, "cannot open '" + p.predictions.string() + "'");
  std::map<std::string, int> predicted;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object())
      fail(Errc::parse, "predictions line " + std::to_string(line_no) + ": bad JSON");
    predicted[j.at("address").get<std::string>()] =
        static_cast<int>(parse_behavior_class(j.at("predicted").get<std::string>()));
  }

  std::vector<int> y_pred, y_true;
  for (const auto& [address, role_is_train] : roles) {
    if (role_is_train) continue;
    auto pred = predicted.find(address);
    require(pred != predicted.end(), Errc::data,
            "test address '" + address + "' missing from predictions");
    auto label = labels.find(address);
    require(label != labels.end(), Errc::data,
            "test address '" + address + "' missing from labels");
    y_pred.push_back(pred->second);
    y_true.push_back(static_cast<int>(label->second));
  }
  const MetricsReport report = evaluate(y_pred, y_true);
  write_file(p.metrics, format_metrics(report));
  update_digests(p);
  return report;
}

inline void run_stage(Stage stage, const PipelineConfig& config) {
  switch (stage) {
    case Stage::Synth: run_synth(config); return;
    case Stage::Ingest: run_ingest(config); return;
    case Stage::BuildGraphs: run_build_graphs(config); return;
    case Stage::TrainGfn: run_train_gfn(config); return;
    case Stage::Embed: run_embed(config); return;
    case Stage::TrainCls: run_train_cls(config); return;
    case Stage::Predict: run_predict(config); return;
    case Stage::Evaluate: run_evaluate(config); return;
  }
  fail(Errc::config, "unknown stage");
}

inline void run_stage(std::string_view name, const PipelineConfig& config) {
  run_stage(parse_stage(name), config);
}

// Full pipeline from the configured inputs; returns the final metrics.
inline MetricsReport run_all(const PipelineConfig& config, bool with_synth = false) {
  if (with_synth) run_synth(config);
  run_ingest(config);
  run_build_graphs(config);
  run_train_gfn(config);
  run_embed(config);
  run_train_cls(config);
  run_predict(config);
  return run_evaluate(config);
}

}  // namespace chainlens
