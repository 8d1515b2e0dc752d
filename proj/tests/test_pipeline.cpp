#include <doctest.h>

#include <sstream>

#include "roomloc/error.hpp"
#include "roomloc/pipeline.hpp"
#include "roomloc/synth.hpp"

using namespace roomloc;

namespace {

TrainOptions quick_options() {
  TrainOptions opt;
  opt.knn_grid = {KnnParams{}};
  opt.tree_grid = {TreeParams{}};
  MlpParams mlp;
  mlp.epochs = 150;
  opt.mlp_grid = {mlp};
  opt.k_outer = 0;
  return opt;
}

const BenchmarkSuite& small_suite() {
  static const BenchmarkSuite suite = benchmark_suite(canonical_environment(), 5, 40);
  return suite;
}

const ModelBundle& small_bundle() {
  static const ModelBundle bundle = train_bundle(small_suite().training, canonical_floor_plan(), quick_options());
  return bundle;
}

std::string saved(const ModelBundle& b) {
  std::ostringstream out;
  save_bundle(out, b);
  return out.str();
}

std::string load_error(const std::string& text) {
  std::istringstream in(text);
  try {
    load_bundle(in, "b.json");
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

void replace(std::string& s, const std::string& from, const std::string& to) {
  const auto pos = s.find(from);
  REQUIRE(pos != std::string::npos);
  s.replace(pos, from.size(), to);
}

}  // namespace

TEST_CASE("bundle assembles the HMM from holdout confusions") {
  const auto& b = small_bundle();
  REQUIRE(b.classifiers.size() == 3);
  CHECK(kind_name(b.classifiers[0].kind) == "knn");
  CHECK(kind_name(b.classifiers[1].kind) == "tree");
  CHECK(kind_name(b.classifiers[2].kind) == "mlp");
  CHECK(b.anchor_count == 8);
  REQUIRE(b.hmm.emitter_count() == 3);
  for (std::size_t k = 0; k < 3; ++k) {
    CHECK(b.hmm.emitters()[k] == likelihood_rows(b.classifiers[k].holdout_confusion, 1.0));
  }
  CHECK(b.hmm.transitions().matrix() == *canonical_floor_plan().explicit_transitions);
  for (double p : b.hmm.pi()) CHECK(p == doctest::Approx(1.0 / 8.0));
  REQUIRE(b.training_time_range);
  CHECK(b.training_time_range->first == small_suite().training.samples.front().timestamp_ms);
}

TEST_CASE("nested CV drives the chosen setting") {
  auto opt = quick_options();
  opt.k_outer = 3;
  opt.k_inner = 3;
  opt.knn_grid = {KnnParams{1, false}, KnnParams{9, true}};
  TrainReport report;
  const auto b = train_bundle(small_suite().training, canonical_floor_plan(), opt, &report);
  REQUIRE(report.cv.size() == 3);
  REQUIRE(report.chosen.size() == 3);
  CHECK(b.classifiers[0].kind == report.cv[0].best);
  CHECK(report.chosen[0] == report.cv[0].best);
  for (const auto& r : report.cv) {
    CHECK(r.outer_accuracy > 0.5);
    CHECK(r.outer_accuracy <= 1.0);
  }
}

TEST_CASE("training input checks") {
  auto data = small_suite().training;
  CHECK_THROWS_AS(train_bundle(data, make_floor_plan(7), quick_options()), Error);
  std::erase_if(data.samples, [](const Fingerprint& f) { return f.label == 5; });
  CHECK_THROWS_WITH_AS(train_bundle(data, canonical_floor_plan(), quick_options()), "zone 5 has no samples",
                       Error);
  auto opt = quick_options();
  opt.tree_grid.clear();
  CHECK_THROWS_AS(train_bundle(small_suite().training, canonical_floor_plan(), opt), Error);
}

TEST_CASE("bundle round trip preserves predictions bit for bit") {
  const auto& b = small_bundle();
  const auto text = saved(b);
  std::istringstream in(text);
  const auto back = load_bundle(in);
  CHECK(back.classifiers == b.classifiers);
  CHECK(back.plan == b.plan);
  CHECK(back.hmm.pi() == b.hmm.pi());
  CHECK(back.hmm.emitters() == b.hmm.emitters());
  CHECK(back.training_time_range == b.training_time_range);
  CHECK(saved(back) == text);

  const auto original = make_predictor_set(b);
  const auto loaded = make_predictor_set(back);
  for (const auto& traj : small_suite().trajectories) {
    const auto r1 = run_benchmark(traj, original);
    const auto r2 = run_benchmark(traj, loaded);
    for (std::size_t p = 0; p < r1.predictors.size(); ++p) {
      CHECK(r1.predictors[p].predictions == r2.predictors[p].predictions);
    }
  }
}

TEST_CASE("corrupt bundles are rejected") {
  const auto text = saved(small_bundle());
  CHECK(load_error("{").find("b.json: malformed bundle") == 0);
  auto wrong = text;
  replace(wrong, "\"roomloc-bundle\"", "\"other\"");
  CHECK(load_error(wrong) == "b.json: not a model bundle");
  wrong = text;
  replace(wrong, "\"version\": 1", "\"version\": 9");
  CHECK(load_error(wrong) == "b.json: unsupported bundle version");
  wrong = text;
  replace(wrong, "\"anchor_count\": 8", "\"anchor_count\": 7");
  CHECK(load_error(wrong) == "b.json: classifier feature count mismatch");
  wrong = text;
  replace(wrong, "\"kind\": \"knn\"", "\"kind\": \"svm\"");
  CHECK(load_error(wrong) == "b.json: unknown classifier kind 'svm'");
  CHECK_THROWS_AS(load_bundle("/nonexistent/bundle.json"), Error);
}

TEST_CASE("predictor set mirrors the bundle") {
  const auto set = make_predictor_set(small_bundle());
  REQUIRE(set.individuals.size() == 3);
  const auto& f = small_suite().trajectories[0].samples[3];
  for (std::size_t k = 0; k < 3; ++k) {
    CHECK(set.individuals[k].predict(f) == predict(small_bundle().classifiers[k], f));
  }
  CHECK(set.training_time_range == small_bundle().training_time_range);
}
