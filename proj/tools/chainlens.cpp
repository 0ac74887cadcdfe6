// chainlens: bitcoin address behavior classification pipeline.
//
// Stages run one at a time against a shared work directory:
//   synth -> ingest -> build-graphs -> train-gfn -> embed -> train-cls ->
//   predict -> evaluate
// run-all executes ingest through evaluate; dump-graph prints one address's
// window graphs for inspection.

#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "chainlens/chainlens.hpp"

namespace {

chainlens::PipelineConfig load(const std::string& config_path,
                               const std::optional<std::uint64_t>& seed_override) {
  chainlens::PipelineConfig config =
      config_path.empty() ? chainlens::PipelineConfig{} : chainlens::load_config(config_path);
  if (seed_override) config.seed = *seed_override;
  return config;
}

void dump_address_graphs(const chainlens::PipelineConfig& config, const std::string& address,
                         bool compressed) {
  const auto p = chainlens::ArtifactPaths::from(config);
  std::ifstream tx_in(p.ingest_transactions);
  chainlens::require(tx_in.good(), chainlens::Errc::dependency,
                     "missing artifact '" + p.ingest_transactions.string() +
                         "'; run ingest first");
  const chainlens::TxStore store(chainlens::parse_transactions(tx_in));
  const chainlens::AddressRecord record = store.history_of(address);
  const auto windows = chainlens::slice_history(record, config.slice_unit);
  for (const auto& window : windows) {
    chainlens::AddressGraph g = chainlens::build_window_graph(window, address);
    if (compressed) {
      g = chainlens::compress_single_tx_addresses(g);
      g = chainlens::compress_multi_tx_addresses(g, config.compression);
    }
    chainlens::dump_graph(g, std::cout);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bitcoin address behavior classifier"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed_override;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "key = value configuration file");
    cmd->add_option("--seed", seed_override, "override the configured seed");
  };

  const char* stage_names[] = {"synth",     "ingest",  "build-graphs", "train-gfn",
                               "embed",     "train-cls", "predict",    "evaluate"};
  const char* stage_help[] = {
      "generate a labeled synthetic dataset",
      "validate inputs and compute the stratified split",
      "slice histories and build compressed, feature-augmented graphs",
      "pretrain the graph encoder on train-split slices",
      "encode every slice into an embedding",
      "train the sequence classifier on train-split embeddings",
      "classify every address's embedding sequence",
      "score test-split predictions",
  };
  for (std::size_t i = 0; i < 8; ++i) add_common(app.add_subcommand(stage_names[i], stage_help[i]));

  CLI::App* run_all_cmd = app.add_subcommand("run-all", "run ingest through evaluate");
  add_common(run_all_cmd);
  bool with_synth = false;
  run_all_cmd->add_flag("--with-synth", with_synth, "generate synthetic data first");

  CLI::App* dump_cmd = app.add_subcommand("dump-graph", "print an address's window graphs");
  add_common(dump_cmd);
  std::string dump_address;
  bool dump_compressed = false;
  dump_cmd->add_option("address", dump_address, "target address")->required();
  dump_cmd->add_flag("--compressed", dump_compressed, "apply both compression passes");

  CLI11_PARSE(app, argc, argv);

  try {
    const chainlens::PipelineConfig config = load(config_path, seed_override);
    if (run_all_cmd->parsed()) {
      const chainlens::MetricsReport report = chainlens::run_all(config, with_synth);
      std::cout << chainlens::format_metrics(report);
      return 0;
    }
    if (dump_cmd->parsed()) {
      dump_address_graphs(config, dump_address, dump_compressed);
      return 0;
    }
    for (const char* name : stage_names)
      if (app.get_subcommand(name)->parsed()) {
        if (std::string(name) == "evaluate") {
          std::cout << chainlens::format_metrics(chainlens::run_evaluate(config));
        } else {
          chainlens::run_stage(name, config);
        }
        return 0;
      }
    std::cerr << "no subcommand\n";
    return 1;
  } catch (const chainlens::Error& e) {
    std::cerr << "error (" << chainlens::errc_name(e.code()) << "): " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
