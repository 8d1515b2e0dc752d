#include "roomloc/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "roomloc/error.hpp"

namespace roomloc {
namespace {

using nlohmann::json;

constexpr const char* kBundleFormat = "roomloc-bundle";
constexpr int kBundleVersion = 1;

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) rows.push_back(std::vector<double>(m.row(r).begin(), m.row(r).end()));
  return rows;
}

Matrix matrix_from_json(const json& j) {
  return Matrix::from_rows(j.get<std::vector<std::vector<double>>>());
}

json kind_to_json(const ClassifierKind& kind) {
  json j;
  j["kind"] = kind_name(kind);
  if (const auto* p = std::get_if<KnnParams>(&kind)) {
    j["params"] = {{"k", p->k}, {"distance_weighted", p->distance_weighted}};
  } else if (const auto* p = std::get_if<TreeParams>(&kind)) {
    j["params"] = {{"min_leaf", p->min_leaf}, {"confidence", p->confidence}};
  } else {
    const auto& m = std::get<MlpParams>(kind);
    j["params"] = {{"hidden", m.hidden},     {"learning_rate", m.learning_rate},
                   {"momentum", m.momentum}, {"epochs", m.epochs},
                   {"seed", m.seed}};
  }
  return j;
}

ClassifierKind kind_from_json(const json& j) {
  const auto name = j.at("kind").get<std::string>();
  const auto& p = j.at("params");
  ClassifierKind kind;
  if (name == "knn") {
    kind = KnnParams{p.at("k").get<int>(), p.at("distance_weighted").get<bool>()};
  } else if (name == "tree") {
    kind = TreeParams{p.at("min_leaf").get<int>(), p.at("confidence").get<double>()};
  } else if (name == "mlp") {
    kind = MlpParams{p.at("hidden").get<int>(), p.at("learning_rate").get<double>(),
                     p.at("momentum").get<double>(), p.at("epochs").get<int>(),
                     p.at("seed").get<std::uint64_t>()};
  } else {
    throw Error("unknown classifier kind '" + name + "'");
  }
  validate_kind(kind);
  return kind;
}

json confusion_to_json(const ConfusionMatrix& cm) {
  json rows = json::array();
  for (std::size_t t = 0; t < cm.zone_count(); ++t) {
    std::vector<std::size_t> row;
    for (std::size_t p = 0; p < cm.zone_count(); ++p) row.push_back(cm(t, p));
    rows.push_back(row);
  }
  return rows;
}

json classifier_to_json(const TrainedClassifier& c) {
  json j = kind_to_json(c.kind);
  j["zone_count"] = c.zone_count;
  j["feature_count"] = c.feature_count;
  j["norm"] = {{"mean", c.norm.mean}, {"stddev", c.norm.stddev}};
  j["holdout_confusion"] = confusion_to_json(c.holdout_confusion);
  if (const auto* m = std::get_if<KnnModel>(&c.model)) {
    j["model"] = {{"instances", matrix_to_json(m->instances)}, {"labels", m->labels}};
  } else if (const auto* m = std::get_if<TreeModel>(&c.model)) {
    json nodes = json::array();
    for (const auto& n : m->nodes) {
      nodes.push_back({n.feature, n.threshold, n.left, n.right, n.label});
    }
    j["model"] = {{"nodes", nodes}};
  } else {
    const auto& mlp = std::get<MlpModel>(c.model);
    j["model"] = {{"w1", matrix_to_json(mlp.w1)}, {"b1", mlp.b1}, {"w2", matrix_to_json(mlp.w2)}, {"b2", mlp.b2}};
  }
  return j;
}

TrainedClassifier classifier_from_json(const json& j) {
  TrainedClassifier c;
  c.kind = kind_from_json(j);
  c.zone_count = j.at("zone_count").get<std::size_t>();
  c.feature_count = j.at("feature_count").get<std::size_t>();
  c.norm.mean = j.at("norm").at("mean").get<std::vector<double>>();
  c.norm.stddev = j.at("norm").at("stddev").get<std::vector<double>>();
  if (c.norm.mean.size() != c.feature_count || c.norm.stddev.size() != c.feature_count) {
    throw Error("normalization stats do not match the feature count");
  }
  c.holdout_confusion =
      ConfusionMatrix::from_rows(j.at("holdout_confusion").get<std::vector<std::vector<std::size_t>>>());
  const auto& m = j.at("model");
  if (std::holds_alternative<KnnParams>(c.kind)) {
    KnnModel k{matrix_from_json(m.at("instances")), m.at("labels").get<std::vector<ZoneId>>()};
    if (k.instances.rows() != k.labels.size()) throw Error("knn instance/label count mismatch");
    c.model = std::move(k);
  } else if (std::holds_alternative<TreeParams>(c.kind)) {
    TreeModel t;
    for (const auto& n : m.at("nodes")) {
      t.nodes.push_back({n.at(0).get<int>(), n.at(1).get<double>(), n.at(2).get<int>(),
                         n.at(3).get<int>(), n.at(4).get<ZoneId>()});
    }
    const int count = static_cast<int>(t.nodes.size());
    if (count == 0) throw Error("tree has no nodes");
    for (const auto& n : t.nodes) {
      if (n.feature >= 0 && (n.left <= 0 || n.left >= count || n.right <= 0 || n.right >= count)) {
        throw Error("tree node child index out of range");
      }
    }
    c.model = std::move(t);
  } else {
    c.model = MlpModel{matrix_from_json(m.at("w1")), m.at("b1").get<std::vector<double>>(),
                       matrix_from_json(m.at("w2")), m.at("b2").get<std::vector<double>>()};
  }
  return c;
}

}  // namespace

HmmModel build_hmm_model(const FloorPlan& plan, const std::vector<TrainedClassifier>& classifiers,
                         double smoothing_alpha) {
  std::vector<Matrix> emitters;
  for (const auto& c : classifiers) {
    if (c.zone_count != plan.zone_count()) throw Error("classifier zone count does not match the floor plan");
    emitters.push_back(likelihood_rows(c.holdout_confusion, smoothing_alpha));
  }
  return HmmModel(initial_distribution(plan.zone_count(), plan.start_zone),
                  transitions_from_floor_plan(plan), std::move(emitters));
}

ModelBundle train_bundle(const LabeledDataset& training, const FloorPlan& plan,
                         const TrainOptions& options, TrainReport* report) {
  if (training.zone_count != plan.zone_count()) {
    throw Error("training data has " + std::to_string(training.zone_count) + " zones, floor plan has " +
                std::to_string(plan.zone_count()));
  }
  const auto counts = training.class_counts();
  for (std::size_t z = 0; z < counts.size(); ++z) {
    if (counts[z] == 0) throw Error("zone " + std::to_string(z) + " has no samples");
  }

  TrainReport local;
  TrainReport& rep = report ? *report : local;
  rep = {};
  const std::vector<const std::vector<ClassifierKind>*> grids{&options.knn_grid, &options.tree_grid,
                                                                &options.mlp_grid};
  std::vector<TrainedClassifier> classifiers;
  for (std::size_t k = 0; k < grids.size(); ++k) {
    const auto& grid = *grids[k];
    if (grid.empty()) throw Error("empty hyperparameter grid");
    // Each learner sees its own balanced subsample.
    const std::uint64_t seed = options.seed + 7919 * (k + 1);
    ClassifierKind chosen = grid.front();
    if (options.k_outer > 0) {
      const auto balanced = balance_dataset(training, seed);
      rep.cv.push_back(nested_cv(grid, balanced, options.k_outer, options.k_inner, seed + 1));
      chosen = rep.cv.back().best;
    }
    rep.chosen.push_back(chosen);
    classifiers.push_back(train(chosen, training, options.holdout_fraction, seed));
  }

  ModelBundle bundle{training.anchor_count, plan, classifiers,
                     build_hmm_model(plan, classifiers, options.smoothing_alpha), options.smoothing_alpha,
                     std::nullopt};
  if (!training.samples.empty()) {
    const auto [lo, hi] = std::minmax_element(
        training.samples.begin(), training.samples.end(),
        [](const Fingerprint& a, const Fingerprint& b) { return a.timestamp_ms < b.timestamp_ms; });
    bundle.training_time_range = std::pair{lo->timestamp_ms, hi->timestamp_ms};
  }
  return bundle;
}

PredictorSet make_predictor_set(const ModelBundle& bundle) {
  std::vector<NamedPredictor> individuals;
  for (const auto& c : bundle.classifiers) {
    individuals.push_back({kind_name(c.kind), [&c](const Fingerprint& f) { return predict(c, f); }});
  }
  return PredictorSet{std::move(individuals), bundle.hmm, bundle.training_time_range};
}

void save_bundle(std::ostream& out, const ModelBundle& bundle) {
  json j;
  j["format"] = kBundleFormat;
  j["version"] = kBundleVersion;
  j["anchor_count"] = bundle.anchor_count;
  std::ostringstream plan_text;
  write_floor_plan(plan_text, bundle.plan);
  j["floor_plan"] = plan_text.str();
  j["smoothing_alpha"] = bundle.smoothing_alpha;
  if (bundle.training_time_range) {
    j["training_time_range"] = {bundle.training_time_range->first, bundle.training_time_range->second};
  }
  j["classifiers"] = json::array();
  for (const auto& c : bundle.classifiers) j["classifiers"].push_back(classifier_to_json(c));
  json emitters = json::array();
  for (const auto& e : bundle.hmm.emitters()) emitters.push_back(matrix_to_json(e));
  j["hmm"] = {{"pi", bundle.hmm.pi()},
              {"transitions", matrix_to_json(bundle.hmm.transitions().matrix())},
              {"emitters", emitters}};
  out << j.dump(1) << '\n';
}

void save_bundle(const std::string& path, const ModelBundle& bundle) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  save_bundle(out, bundle);
  if (!out) throw Error("write failed: " + path);
}

ModelBundle load_bundle(std::istream& in, const std::string& source) {
  try {
    const json j = json::parse(in);
    if (j.at("format").get<std::string>() != kBundleFormat) throw Error("not a model bundle");
    if (j.at("version").get<int>() != kBundleVersion) throw Error("unsupported bundle version");
    std::istringstream plan_text(j.at("floor_plan").get<std::string>());
    FloorPlan plan = parse_floor_plan(plan_text, source + "#floor_plan");
    std::vector<TrainedClassifier> classifiers;
    for (const auto& c : j.at("classifiers")) classifiers.push_back(classifier_from_json(c));
    const auto& h = j.at("hmm");
    std::vector<Matrix> emitters;
    for (const auto& e : h.at("emitters")) emitters.push_back(matrix_from_json(e));
    HmmModel hmm(h.at("pi").get<std::vector<double>>(), TransitionMatrix(matrix_from_json(h.at("transitions"))),
                 std::move(emitters));
    if (hmm.emitter_count() != classifiers.size()) throw Error("emitter count does not match classifier count");
    ModelBundle b{j.at("anchor_count").get<std::size_t>(), std::move(plan), std::move(classifiers),
                  std::move(hmm), j.at("smoothing_alpha").get<double>(), std::nullopt};
    if (j.contains("training_time_range")) {
      const auto& r = j.at("training_time_range");
      b.training_time_range = std::pair{r.at(0).get<std::int64_t>(), r.at(1).get<std::int64_t>()};
    }
    for (const auto& c : b.classifiers) {
      if (c.feature_count != b.anchor_count + kMfFeatures) throw Error("classifier feature count mismatch");
      if (c.zone_count != b.plan.zone_count()) throw Error("classifier zone count mismatch");
    }
    return b;
  } catch (const json::exception& e) {
    throw Error(source + ": malformed bundle: " + e.what());
  } catch (const Error& e) {
    throw Error(source + ": " + e.what());
  }
}

ModelBundle load_bundle(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path);
  return load_bundle(in, path);
}

}  // namespace roomloc
