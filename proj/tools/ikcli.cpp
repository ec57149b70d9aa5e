// Experiment CLI: loads a config, applies flag overrides, and runs one of
// the experiments (rate_sweep, tail_sweep, coercivity, lowerbound,
// identity_suite, simulate, estimate).
#include <cstdint>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "ik/experiments.hpp"
#include "ik/parallel.hpp"

int main(int argc, char** argv) {
  CLI::App app{"interaction-kernel estimation experiments"};

  std::string config_path;
  std::string out_dir;
  std::string experiment;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int threads = 0;

  app.add_option("--config", config_path, "experiment config file")->required();
  app.add_option("--seed", seed, "seed override (replaces [system] seed)")
      ->each([&](const std::string&) { seed_set = true; });
  app.add_option("--out", out_dir, "output directory override");
  app.add_option("--threads", threads, "worker threads (speed only, never results)");
  app.add_option("--experiment", experiment, "experiment kind override");

  CLI11_PARSE(app, argc, argv);

  try {
    ik::ExperimentConfig cfg = ik::load_config(config_path);
    if (seed_set) cfg.system.seed = seed;
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (!experiment.empty()) cfg.kind = experiment;
    ik::set_threads(threads);
    return ik::run_experiment(cfg);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
