// coevo: command-line front end for the batch experiment engine.
//
//   coevo <kind> --config <path> [--replicates N] [--seed S] [--out DIR] [--workers W]
//   coevo validate --config <path>
//   coevo defaults

#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "coevo/engine/batch.hpp"
#include "coevo/engine/config.hpp"
#include "coevo/engine/report.hpp"

namespace eng = coevo::engine;

int main(int argc, char** argv) {
  CLI::App app{"Seeded NK / NK(C) / technology-substitution / meta-GA experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::size_t> replicates;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<std::size_t> workers;

  std::vector<std::pair<CLI::App*, eng::ExperimentKind>> runs;
  for (auto kind : eng::kAllKinds) {
    auto* sub = app.add_subcommand(std::string(eng::to_string(kind)),
                                   "Run a " + std::string(eng::to_string(kind)) + " batch");
    sub->add_option("--config", config_path, "JSON experiment config")->required();
    sub->add_option("--replicates", replicates, "Override the replicate count");
    sub->add_option("--seed", seed, "Override the base seed");
    sub->add_option("--out", out_dir, "Override the output directory");
    sub->add_option("--workers", workers, "Worker threads for replicates");
    runs.emplace_back(sub, kind);
  }
  auto* validate = app.add_subcommand("validate", "Check a config without running it");
  validate->add_option("--config", config_path, "JSON experiment config")->required();
  auto* defaults = app.add_subcommand("defaults", "Print the default config of every kind");

  CLI11_PARSE(app, argc, argv);

  try {
    if (defaults->parsed()) {
      std::cout << eng::defaults_document().dump(2) << "\n";
      return 0;
    }
    if (validate->parsed()) {
      const auto cfg = eng::load_config(config_path);
      std::cout << "ok: " << eng::to_string(cfg.kind) << " config is valid\n";
      return 0;
    }
    for (const auto& [sub, kind] : runs) {
      if (!sub->parsed()) continue;
      auto cfg = eng::load_config(config_path, kind);
      if (replicates) {
        if (*replicates == 0) throw eng::ConfigError("replicates", "replicates must be at least 1");
        cfg.replicates = *replicates;
      }
      if (seed) cfg.base_seed = *seed;
      if (out_dir) cfg.output = *out_dir;
      if (workers) {
        if (*workers == 0) throw eng::ConfigError("workers", "workers must be at least 1");
        cfg.workers = *workers;
      }
      const auto logs = eng::run_batch(cfg);
      const auto paths = eng::write_reports(logs, cfg, cfg.output);
      std::cout << "wrote " << paths.series.string() << "\n"
                << "wrote " << paths.summary.string() << "\n"
                << "wrote " << paths.text.string() << "\n";
      return 0;
    }
  } catch (const eng::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
