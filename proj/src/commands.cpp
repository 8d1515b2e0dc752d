#include "roomloc/commands.hpp"

#include <filesystem>
#include <fstream>
#include <ostream>
#include <set>

#include <json.hpp>

#include "roomloc/baselines.hpp"
#include "roomloc/error.hpp"
#include "roomloc/eval.hpp"
#include "roomloc/pipeline.hpp"

namespace roomloc {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw Error(where + ": expected an object");
  for (const auto& [key, _] : j.items()) {
    if (!allowed.count(key)) throw Error(where + ": unknown key '" + key + "'");
  }
}

std::vector<ClassifierKind> grid_from_json(const json& arr, const std::string& kind) {
  if (!arr.is_array() || arr.empty()) throw Error("grids." + kind + " must be a non-empty array");
  std::vector<ClassifierKind> grid;
  for (const auto& e : arr) {
    const std::string where = "grids." + kind;
    if (kind == "knn") {
      check_keys(e, {"k", "distance_weighted"}, where);
      KnnParams p;
      p.k = e.value("k", p.k);
      p.distance_weighted = e.value("distance_weighted", p.distance_weighted);
      grid.emplace_back(p);
    } else if (kind == "tree") {
      check_keys(e, {"min_leaf", "confidence"}, where);
      TreeParams p;
      p.min_leaf = e.value("min_leaf", p.min_leaf);
      p.confidence = e.value("confidence", p.confidence);
      grid.emplace_back(p);
    } else {
      check_keys(e, {"hidden", "learning_rate", "momentum", "epochs", "seed"}, where);
      MlpParams p;
      p.hidden = e.value("hidden", p.hidden);
      p.learning_rate = e.value("learning_rate", p.learning_rate);
      p.momentum = e.value("momentum", p.momentum);
      p.epochs = e.value("epochs", p.epochs);
      p.seed = e.value("seed", p.seed);
      grid.emplace_back(p);
    }
    validate_kind(grid.back());
  }
  return grid;
}

std::string resolve(const std::string& base_dir, const std::string& p) {
  if (p.empty() || base_dir.empty() || fs::path(p).is_absolute()) return p;
  return (fs::path(base_dir) / p).lexically_normal().string();
}

fs::path ensure_out_dir(const RunConfig& config) {
  const fs::path dir(config.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw Error("cannot create output directory " + dir.string());
  return dir;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

void print_counts(std::ostream& out, const std::string& name, const LabeledDataset& data) {
  out << name << ',' << data.samples.size();
  for (auto c : data.class_counts()) out << ',' << c;
  out << '\n';
}

LabeledDataset read_trajectory(const ModelBundle& bundle, const std::string& path) {
  auto data = read_fingerprint_csv(path, bundle.plan.zone_count());
  if (data.anchor_count != bundle.anchor_count) {
    throw Error(path + ": trajectory has " + std::to_string(data.anchor_count) +
                " anchors, model expects " + std::to_string(bundle.anchor_count));
  }
  return data;
}

// Individuals that echo the label, with emitters from a perfect confusion.
PredictorSet oracle_predictor_set(const ModelBundle& bundle) {
  PredictorSet set = make_predictor_set(bundle);
  std::vector<Matrix> emitters;
  for (auto& p : set.individuals) {
    p.predict = [](const Fingerprint& f) {
      if (!f.label) throw Error("oracle stub needs labelled fingerprints");
      return *f.label;
    };
    const std::size_t n = bundle.plan.zone_count();
    ConfusionMatrix perfect(n);
    for (std::size_t z = 0; z < n; ++z) perfect.add(static_cast<ZoneId>(z), static_cast<ZoneId>(z), 100);
    emitters.push_back(likelihood_rows(perfect, bundle.smoothing_alpha));
  }
  set.hmm = HmmModel(bundle.hmm.pi(), bundle.hmm.transitions(), std::move(emitters));
  return set;
}

}  // namespace

RunConfig parse_run_config(std::istream& in, const std::string& base_dir, const std::string& source) {
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(source + ": " + e.what());
  }
  RunConfig c;
  try {
    check_keys(j,
               {"environment", "floor_plan", "out", "seed", "k_outer", "k_inner", "holdout_fraction",
                "smoothing_alpha", "stay_prob", "min_per_zone", "grids"},
               source);
    c.environment = resolve(base_dir, j.value("environment", c.environment));
    c.floor_plan = resolve(base_dir, j.value("floor_plan", c.floor_plan));
    c.out = j.value("out", c.out);
    c.seed = j.value("seed", c.seed);
    c.k_outer = j.value("k_outer", c.k_outer);
    c.k_inner = j.value("k_inner", c.k_inner);
    c.holdout_fraction = j.value("holdout_fraction", c.holdout_fraction);
    c.smoothing_alpha = j.value("smoothing_alpha", c.smoothing_alpha);
    if (j.contains("stay_prob")) c.stay_prob = j.at("stay_prob").get<double>();
    c.min_per_zone = j.value("min_per_zone", c.min_per_zone);
    if (j.contains("grids")) {
      const auto& g = j.at("grids");
      check_keys(g, {"knn", "tree", "mlp"}, source + ": grids");
      if (g.contains("knn")) c.knn_grid = grid_from_json(g.at("knn"), "knn");
      if (g.contains("tree")) c.tree_grid = grid_from_json(g.at("tree"), "tree");
      if (g.contains("mlp")) c.mlp_grid = grid_from_json(g.at("mlp"), "mlp");
    }
  } catch (const json::exception& e) {
    throw Error(source + ": " + e.what());
  }
  if (c.k_outer == 1) throw Error(source + ": k_outer must be 0 or at least 2");
  if (c.k_outer > 0 && c.k_inner < 2) throw Error(source + ": k_inner must be at least 2");
  if (!(c.holdout_fraction > 0.0 && c.holdout_fraction <= 0.5)) {
    throw Error(source + ": holdout_fraction must be in (0, 0.5]");
  }
  if (!(c.smoothing_alpha >= 0.0)) throw Error(source + ": smoothing_alpha must be non-negative");
  if (c.stay_prob && !(*c.stay_prob > 0.0 && *c.stay_prob <= 1.0)) {
    throw Error(source + ": stay_prob must be in (0, 1]");
  }
  if (c.min_per_zone == 0) throw Error(source + ": min_per_zone must be positive");
  return c;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path);
  return parse_run_config(in, fs::path(path).parent_path().string(), path);
}

FloorPlan resolve_floor_plan(const RunConfig& config) {
  FloorPlan plan;
  if (!config.floor_plan.empty()) {
    plan = read_floor_plan(config.floor_plan);
  } else if (config.environment.empty()) {
    plan = canonical_floor_plan();
  } else {
    throw Error("a custom environment needs a floor_plan in the config");
  }
  if (config.stay_prob && !plan.explicit_transitions) plan.stay_prob.assign(plan.zone_count(), *config.stay_prob);
  return plan;
}

Environment resolve_environment(const RunConfig& config) {
  Environment env = config.environment.empty() ? canonical_environment() : read_environment(config.environment);
  env.plan = resolve_floor_plan(config);
  if (env.plan.zone_count() != env.zone_count()) {
    throw Error("floor plan has " + std::to_string(env.plan.zone_count()) + " zones, environment has " +
                std::to_string(env.zone_count()));
  }
  return env;
}

void cmd_simulate(const RunConfig& config, std::ostream& out) {
  const Environment env = resolve_environment(config);
  const auto suite = benchmark_suite(env, config.seed, config.min_per_zone);
  const auto dir = ensure_out_dir(config);

  auto train_out = open_out(dir / "train.csv");
  write_fingerprint_csv(train_out, suite.training);
  for (std::size_t i = 0; i < suite.trajectories.size(); ++i) {
    auto f = open_out(dir / ("traj_" + std::to_string(i + 1) + ".csv"));
    write_fingerprint_csv(f, suite.trajectories[i]);
  }
  auto plan_out = open_out(dir / "plan.txt");
  write_floor_plan(plan_out, env.plan);
  auto env_out = open_out(dir / "env.txt");
  write_environment(env_out, env);

  out << "file,samples";
  for (std::size_t z = 0; z < env.zone_count(); ++z) out << ",zone_" << z;
  out << '\n';
  print_counts(out, "train.csv", suite.training);
  for (std::size_t i = 0; i < suite.trajectories.size(); ++i) {
    print_counts(out, "traj_" + std::to_string(i + 1) + ".csv", suite.trajectories[i]);
  }
}

void cmd_train(const RunConfig& config, const std::string& training_csv, std::ostream& out,
               std::ostream& diag) {
  const FloorPlan plan = resolve_floor_plan(config);
  const auto training = read_fingerprint_csv(training_csv, plan.zone_count());
  TrainOptions opt;
  opt.knn_grid = config.knn_grid;
  opt.tree_grid = config.tree_grid;
  opt.mlp_grid = config.mlp_grid;
  opt.k_outer = config.k_outer;
  opt.k_inner = config.k_inner;
  opt.holdout_fraction = config.holdout_fraction;
  opt.smoothing_alpha = config.smoothing_alpha;
  opt.seed = config.seed;
  TrainReport report;
  const auto bundle = train_bundle(training, plan, opt, &report);
  std::vector<std::string> warnings;
  transitions_from_floor_plan(plan, &warnings);
  for (const auto& w : floor_plan_warnings(plan)) warnings.push_back(w);

  const auto dir = ensure_out_dir(config);
  save_bundle((dir / "bundle.json").string(), bundle);

  out << "kind,chosen,outer_cv_accuracy,holdout_accuracy\n";
  for (std::size_t k = 0; k < bundle.classifiers.size(); ++k) {
    const auto& c = bundle.classifiers[k];
    out << kind_name(c.kind) << ',' << describe(report.chosen[k]) << ',';
    if (k < report.cv.size()) out << format_double(report.cv[k].outer_accuracy);
    const auto& cm = c.holdout_confusion;
    out << ',' << format_double(static_cast<double>(cm.trace()) / static_cast<double>(cm.total())) << '\n';
  }
  for (const auto& w : warnings) diag << "warning: " << w << '\n';
}

void cmd_eval(const RunConfig& config, const std::string& bundle_path,
              const std::vector<std::string>& trajectory_csvs, bool oracle_stub, std::ostream& out) {
  if (trajectory_csvs.empty()) throw Error("eval needs at least one trajectory file");
  const auto bundle = load_bundle(bundle_path);
  std::vector<LabeledDataset> trajectories;
  for (const auto& p : trajectory_csvs) trajectories.push_back(read_trajectory(bundle, p));
  const PredictorSet set = oracle_stub ? oracle_predictor_set(bundle) : make_predictor_set(bundle);

  const auto dir = ensure_out_dir(config);
  auto long_out = open_out(dir / "metrics_long.csv");
  auto latency_out = open_out(dir / "latency.csv");
  write_long_header(long_out);
  write_latency_header(latency_out);

  std::vector<EvalReport> reports;
  std::set<std::string> stems;
  for (std::size_t i = 0; i < trajectories.size(); ++i) {
    const std::string stem = fs::path(trajectory_csvs[i]).stem().string();
    if (!stems.insert(stem).second) throw Error("duplicate trajectory name '" + stem + "'");
    reports.push_back(run_benchmark(trajectories[i], set, stem));
    auto table = open_out(dir / ("report_" + stem + ".csv"));
    write_report_tables(table, reports.back());
    write_long_rows(long_out, reports.back());
    write_latency_rows(latency_out, reports.back());
  }

  out << "trajectory";
  for (const auto& p : reports.front().predictors) out << ',' << p.name;
  out << '\n';
  for (const auto& r : reports) {
    out << r.trajectory;
    for (const auto& p : r.predictors) out << ',' << format_double(p.accuracy);
    out << '\n';
  }
}

void cmd_track(const std::string& bundle_path, const std::string& trajectory_csv, std::ostream& out) {
  const auto bundle = load_bundle(bundle_path);
  const auto data = read_trajectory(bundle, trajectory_csv);
  const PredictorSet set = make_predictor_set(bundle);
  const std::size_t m = set.individuals.size();

  auto tracker = tracker_init(set.hmm);
  std::vector<std::size_t> correct(m + 2, 0);
  bool labelled = !data.samples.empty();
  ObservationTuple obs(m);
  for (const auto& f : data.samples) {
    for (std::size_t k = 0; k < m; ++k) obs[k] = set.individuals[k].predict(f);
    const ZoneId hmm = tracker_step(tracker, set.hmm, obs);
    const ZoneId vote = majority_vote(obs);
    out << f.timestamp_ms << ',';
    if (f.label) out << *f.label;
    out << ',' << hmm << ',' << vote;
    for (auto o : obs) out << ',' << o;
    out << '\n';
    if (!f.label) {
      labelled = false;
      continue;
    }
    correct[0] += hmm == *f.label;
    correct[1] += vote == *f.label;
    for (std::size_t k = 0; k < m; ++k) correct[k + 2] += obs[k] == *f.label;
  }
  if (labelled) {
    out << "summary,";
    for (auto c : correct) {
      out << ',' << format_double(static_cast<double>(c) / static_cast<double>(data.samples.size()));
    }
    out << '\n';
  }
  out.flush();
}

void cmd_dump(const std::string& bundle_path, std::ostream& out) {
  const auto bundle = load_bundle(bundle_path);
  out << "[classifiers]\n";
  for (const auto& c : bundle.classifiers) out << describe(c.kind) << '\n';
  out << "[floor_plan]\n";
  write_floor_plan(out, bundle.plan);
  write_model_dump(out, bundle.hmm);
}

}  // namespace roomloc
