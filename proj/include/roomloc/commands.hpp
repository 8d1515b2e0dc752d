#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "roomloc/classifiers.hpp"
#include "roomloc/model.hpp"
#include "roomloc/synth.hpp"

namespace roomloc {

// Settings shared by every subcommand. Paths are used as given; the config
// loader resolves relative ones against the config file's directory.
struct RunConfig {
  std::string environment;  // empty: built-in benchmark environment
  std::string floor_plan;   // empty: built-in plan (only with the built-in environment)
  std::string out = "out";
  std::uint64_t seed = 1;
  std::size_t k_outer = 10;
  std::size_t k_inner = 10;
  double holdout_fraction = 0.3;
  double smoothing_alpha = 1.0;
  // Replaces every zone's stay probability; ignored when the plan carries a matrix.
  std::optional<double> stay_prob;
  std::size_t min_per_zone = 250;
  std::vector<ClassifierKind> knn_grid = default_grid_knn();
  std::vector<ClassifierKind> tree_grid = default_grid_tree();
  std::vector<ClassifierKind> mlp_grid = default_grid_mlp();
};

// JSON object with any subset of the RunConfig fields; unknown keys are errors.
RunConfig parse_run_config(std::istream& in, const std::string& base_dir = "",
                           const std::string& source = "<stream>");
RunConfig load_run_config(const std::string& path);

Environment resolve_environment(const RunConfig& config);
FloorPlan resolve_floor_plan(const RunConfig& config);

// Each command writes its files under config.out and its table to out.
void cmd_simulate(const RunConfig& config, std::ostream& out);
// Floor-plan warnings go to diag.
void cmd_train(const RunConfig& config, const std::string& training_csv, std::ostream& out,
               std::ostream& diag);
void cmd_eval(const RunConfig& config, const std::string& bundle_path,
              const std::vector<std::string>& trajectory_csvs, bool oracle_stub, std::ostream& out);
void cmd_track(const std::string& bundle_path, const std::string& trajectory_csv, std::ostream& out);
void cmd_dump(const std::string& bundle_path, std::ostream& out);

}  // namespace roomloc
