#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "stocon/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"stocon: stochastic contraction analysis of random dynamical systems"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<long> paths;
  std::optional<int> threads;

  CLI::App* run = app.add_subcommand("run", "run an experiment described by a config file");
  run->add_option("config", config_path, "path to the experiment config")->required();
  run->add_option("--out", out_dir, "output directory (overrides the config)");
  run->add_option("--seed", seed, "master seed (overrides the config)");
  run->add_option("--paths", paths, "ensemble size (overrides the config)");
  run->add_option("--threads", threads, "worker count; 0 = available parallelism");

  CLI::App* list = app.add_subcommand("list-scenarios", "print the scenario builders and their analyses");

  CLI11_PARSE(app, argc, argv);

  if (list->parsed()) {
    for (const auto& [name, desc] : stocon::list_scenarios())
      std::cout << name << "\n    " << desc << "\n";
    return 0;
  }

  try {
    stocon::ExperimentConfig cfg = stocon::parse_config_file(config_path);
    if (out_dir) cfg.out_dir = *out_dir;
    if (seed) cfg.seed = *seed;
    if (paths) {
      if (*paths < 1) throw stocon::ConfigError("--paths must be >= 1");
      cfg.paths = *paths;
    }
    if (threads) {
      cfg.threads = *threads;
    } else if (const char* env = std::getenv("STOCON_THREADS")) {
      cfg.threads = std::max(0, std::atoi(env));
    }

    const stocon::RunReport report = stocon::run_experiment(cfg);
    for (const auto& row : report.rows) {
      std::cout << "[" << row.analysis << "] " << row.quantity << " = " << row.estimate
                << (row.verdict < 0 ? "" : (row.verdict ? "  verdict=true" : "  verdict=false")) << "\n";
    }
    std::cout << "outputs in " << cfg.out_dir << " (exit " << report.exit_code << ")\n";
    return report.exit_code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
