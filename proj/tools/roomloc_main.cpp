#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "roomloc/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Room-level indoor localization: simulate, train, evaluate and track"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  app.add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "overrides the config seed");
  app.add_option("--out", out_dir, "output directory (default: out)");

  auto* simulate = app.add_subcommand("simulate", "write a training set and three trajectories");

  std::string train_csv;
  auto* train = app.add_subcommand("train", "fit the classifiers and the HMM into out/bundle.json");
  train->add_option("training_csv", train_csv, "labelled fingerprint CSV")->required();

  std::string bundle;
  std::vector<std::string> trajectories;
  bool oracle = false;
  auto* eval = app.add_subcommand("eval", "score all predictors on labelled trajectories");
  eval->add_option("bundle", bundle, "model bundle")->required();
  eval->add_option("trajectories", trajectories, "trajectory CSVs")->required();
  eval->add_flag("--oracle-stub", oracle, "replace the classifiers with the true labels");

  std::string track_csv;
  auto* track = app.add_subcommand("track", "stream per-fingerprint zone estimates");
  track->add_option("bundle", bundle, "model bundle")->required();
  track->add_option("trajectory", track_csv, "fingerprint CSV")->required();

  auto* dump = app.add_subcommand("dump", "print the HMM parameters of a bundle");
  dump->add_option("bundle", bundle, "model bundle")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    roomloc::RunConfig config;
    if (!config_path.empty()) config = roomloc::load_run_config(config_path);
    if (seed) config.seed = *seed;
    if (out_dir) config.out = *out_dir;

    if (*simulate) {
      roomloc::cmd_simulate(config, std::cout);
    } else if (*train) {
      roomloc::cmd_train(config, train_csv, std::cout, std::cerr);
    } else if (*eval) {
      roomloc::cmd_eval(config, bundle, trajectories, oracle, std::cout);
    } else if (*track) {
      roomloc::cmd_track(bundle, track_csv, std::cout);
    } else if (*dump) {
      roomloc::cmd_dump(bundle, std::cout);
    }
    std::cout.flush();
    if (!std::cout) {
      std::cerr << "error: failed writing to standard output\n";
      return 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
