#include <doctest.h>

#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "roomloc/commands.hpp"
#include "roomloc/pipeline.hpp"

using namespace roomloc;
namespace fs = std::filesystem;

namespace {

const fs::path& workdir() {
  static const fs::path dir = [] {
    std::string tmpl = (fs::temp_directory_path() / "roomloc_cli_XXXXXX").string();
    REQUIRE(mkdtemp(tmpl.data()) != nullptr);
    return fs::path(tmpl);
  }();
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Run {
  int status;
  std::string out;
  std::string err;
};

Run run(const std::string& args) {
  const auto out = workdir() / "stdout.txt";
  const auto err = workdir() / "stderr.txt";
  const std::string cmd = "cd '" + workdir().string() + "' && '" ROOMLOC_CLI "' " + args + " >'" +
                          out.string() + "' 2>'" + err.string() + "'";
  const int raw = std::system(cmd.c_str());
  return {WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, slurp(out), slurp(err)};
}

// Small but complete configuration: few samples per zone, one setting per grid.
const fs::path& config() {
  static const fs::path path = [] {
    const auto p = workdir() / "config.json";
    std::ofstream(p) << R"({
  "environment": ")" ROOMLOC_DATA_DIR R"(/benchmark_env.txt",
  "floor_plan": ")" ROOMLOC_DATA_DIR R"(/benchmark_plan.txt",
  "seed": 3,
  "k_outer": 3,
  "k_inner": 3,
  "min_per_zone": 40,
  "grids": {"knn": [{"k": 5}], "tree": [{"confidence": 0.25}], "mlp": [{"hidden": 8, "epochs": 100}]}
})";
    return p;
  }();
  return path;
}

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

void prepare() {
  static bool done = false;
  if (done) return;
  REQUIRE(run("simulate --config " + config().string() + " --out sim").status == 0);
  REQUIRE(run("train --config " + config().string() + " --out model sim/train.csv").status == 0);
  done = true;
}

}  // namespace

TEST_CASE("simulate writes the dataset files deterministically") {
  const auto r1 = run("simulate --config " + config().string() + " --out a");
  REQUIRE(r1.status == 0);
  CHECK(r1.out.rfind("file,samples,zone_0,", 0) == 0);
  CHECK(count_lines(r1.out) == 5);
  const auto r2 = run("--config " + config().string() + " --out b simulate");
  REQUIRE(r2.status == 0);
  CHECK(r1.out == r2.out);
  for (const char* f : {"train.csv", "traj_1.csv", "traj_2.csv", "traj_3.csv", "plan.txt", "env.txt"}) {
    CHECK(fs::exists(workdir() / "a" / f));
    CHECK(slurp(workdir() / "a" / f) == slurp(workdir() / "b" / f));
  }
  CHECK(slurp(workdir() / "a" / "traj_1.csv")
            .rfind("timestamp_ms,zone_id,rssi_0,rssi_1,rssi_2,rssi_3,rssi_4,rssi_5,rssi_6,rssi_7,mf_x,", 0) == 0);
  const auto r3 = run("simulate --config " + config().string() + " --seed 4 --out c");
  REQUIRE(r3.status == 0);
  CHECK(slurp(workdir() / "a" / "train.csv") != slurp(workdir() / "c" / "train.csv"));
}

TEST_CASE("train, eval and track are byte-identical across runs") {
  prepare();
  const auto t = run("train --config " + config().string() + " --out model2 sim/train.csv");
  REQUIRE(t.status == 0);
  CHECK(t.out.rfind("kind,chosen,outer_cv_accuracy,holdout_accuracy\nknn,knn(k=5", 0) == 0);
  CHECK(slurp(workdir() / "model" / "bundle.json") == slurp(workdir() / "model2" / "bundle.json"));

  const std::string trajs = " sim/traj_1.csv sim/traj_2.csv sim/traj_3.csv";
  const auto e1 = run("eval --out ev1 model/bundle.json" + trajs);
  const auto e2 = run("eval --out ev2 model2/bundle.json" + trajs);
  REQUIRE(e1.status == 0);
  CHECK(e1.out == e2.out);
  CHECK(e1.out.rfind("trajectory,knn,tree,mlp,voting,hmm_d\ntraj_1,", 0) == 0);
  CHECK(count_lines(e1.out) == 4);
  for (const char* f : {"report_traj_1.csv", "report_traj_2.csv", "report_traj_3.csv", "metrics_long.csv"}) {
    CHECK(slurp(workdir() / "ev1" / f) == slurp(workdir() / "ev2" / f));
  }
  CHECK(fs::exists(workdir() / "ev1" / "latency.csv"));

  const auto k1 = run("track model/bundle.json sim/traj_2.csv");
  const auto k2 = run("track model2/bundle.json sim/traj_2.csv");
  REQUIRE(k1.status == 0);
  CHECK(k1.out == k2.out);
}

TEST_CASE("oracle stub scores perfectly") {
  prepare();
  const auto r = run("eval --oracle-stub --out oracle model/bundle.json sim/traj_1.csv sim/traj_3.csv");
  REQUIRE(r.status == 0);
  CHECK(r.out == "trajectory,knn,tree,mlp,voting,hmm_d\ntraj_1,1,1,1,1,1\ntraj_3,1,1,1,1,1\n");
}

TEST_CASE("track streams one line per fingerprint plus a summary") {
  prepare();
  const auto traj = read_fingerprint_csv((workdir() / "sim" / "traj_1.csv").string(), 8);
  LabeledDataset first{traj.anchor_count, 8, {traj.samples.begin(), traj.samples.begin() + 20}};
  write_fingerprint_csv((workdir() / "twenty.csv").string(), first);
  const auto r = run("track model/bundle.json twenty.csv");
  REQUIRE(r.status == 0);
  CHECK(count_lines(r.out) == 21);
  const auto last_nl = r.out.rfind('\n', r.out.size() - 2);
  CHECK(r.out.substr(last_nl + 1).rfind("summary,,", 0) == 0);

  // Last streamed HMM-d zone is the final state of offline decoding.
  const auto bundle = load_bundle((workdir() / "model" / "bundle.json").string());
  std::vector<ObservationTuple> obs;
  for (const auto& f : first.samples) {
    ObservationTuple o;
    for (const auto& c : bundle.classifiers) o.push_back(predict(c, f));
    obs.push_back(o);
  }
  const auto offline = viterbi(bundle.hmm, obs);
  std::istringstream lines(r.out);
  std::string line, last_estimate;
  for (int i = 0; i < 20 && std::getline(lines, line); ++i) last_estimate = line;
  std::istringstream cells(last_estimate);
  std::string ts, truth, hmm;
  std::getline(cells, ts, ',');
  std::getline(cells, truth, ',');
  std::getline(cells, hmm, ',');
  CHECK(std::stoi(hmm) == offline.back());

  for (auto& f : first.samples) f.label.reset();
  write_fingerprint_csv((workdir() / "unlabeled.csv").string(), first);
  const auto u = run("track model/bundle.json unlabeled.csv");
  REQUIRE(u.status == 0);
  CHECK(count_lines(u.out) == 20);
  CHECK(u.out.find("summary") == std::string::npos);
  CHECK(u.out.find(",,") != std::string::npos);
}

TEST_CASE("errors exit non-zero with a message on stderr") {
  prepare();
  auto r = run("eval model/bundle.json missing.csv");
  CHECK(r.status == 1);
  CHECK(r.err.find("missing.csv") != std::string::npos);
  CHECK(r.out.empty());

  {
    std::ofstream bad(workdir() / "bad_env.txt");
    bad << "floor 18 16\nzone 0 0 0 18 16\nanchor 0 0 0\n";
    std::ofstream cfg(workdir() / "bad_config.json");
    cfg << R"({"environment": "bad_env.txt", "floor_plan": ")" ROOMLOC_DATA_DIR R"(/benchmark_plan.txt"})";
  }
  r = run("simulate --config bad_config.json --out bad");
  CHECK(r.status == 1);
  CHECK(r.err.find("bad_env.txt:3") != std::string::npos);

  // Three anchors instead of eight.
  std::ofstream(workdir() / "three.csv") << "timestamp_ms,zone_id,rssi_0,rssi_1,rssi_2,mf_x,mf_y,mf_z,mf_mag\n"
                                         << "1,0,-50,-60,-70,1,2,2,3\n";
  r = run("track model/bundle.json three.csv");
  CHECK(r.status == 1);
  CHECK(r.err.find("anchors") != std::string::npos);

  std::ofstream(workdir() / "badcol.csv") << "timestamp_ms,zone,rssi_0,mf_x,mf_y,mf_z,mf_mag\n";
  r = run("train --config " + config().string() + " --out x badcol.csv");
  CHECK(r.status == 1);
  CHECK(r.err.find("zone_id") != std::string::npos);

  // Training data overlapping the trajectory in time.
  r = run("eval --out ov model/bundle.json sim/train.csv");
  CHECK(r.status == 1);
  CHECK(r.err.find("overlaps the training data") != std::string::npos);

  std::ofstream(workdir() / "cfg_typo.json") << R"({"seeds": 3})";
  r = run("simulate --config cfg_typo.json");
  CHECK(r.status == 1);
  CHECK(r.err.find("unknown key 'seeds'") != std::string::npos);

  CHECK(run("").status != 0);
  CHECK(run("frobnicate").status != 0);
}

TEST_CASE("dump prints the model sections") {
  prepare();
  const auto r = run("dump model/bundle.json");
  REQUIRE(r.status == 0);
  CHECK(r.out.find("[transitions]\n0.6 0.4 0 0 0 0 0 0\n") != std::string::npos);
  CHECK(r.out.find("[emitter 2]") != std::string::npos);
}

TEST_CASE("config paths resolve against the config file") {
  const auto c = load_run_config(ROOMLOC_DATA_DIR "/benchmark_config.json");
  CHECK(c.environment == fs::path(ROOMLOC_DATA_DIR "/benchmark_env.txt").lexically_normal().string());
  CHECK(resolve_environment(c) == canonical_environment());
  std::istringstream in(R"({"k_outer": 1})");
  CHECK_THROWS(parse_run_config(in));
}
