#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "roomloc/classifiers.hpp"
#include "roomloc/eval.hpp"
#include "roomloc/hmm.hpp"
#include "roomloc/model.hpp"

namespace roomloc {

// Everything the on-line phase needs: the base classifiers, the HMM built
// from their holdout confusions, and the floor plan it came from.
struct ModelBundle {
  std::size_t anchor_count = 0;
  FloorPlan plan;
  std::vector<TrainedClassifier> classifiers;
  HmmModel hmm;
  double smoothing_alpha = 1.0;
  std::optional<std::pair<std::int64_t, std::int64_t>> training_time_range;
};

// pi from the plan's start zone, A from the plan, one smoothed likelihood
// matrix per classifier from its holdout confusion.
HmmModel build_hmm_model(const FloorPlan& plan, const std::vector<TrainedClassifier>& classifiers,
                         double smoothing_alpha);

struct TrainOptions {
  std::vector<ClassifierKind> knn_grid = default_grid_knn();
  std::vector<ClassifierKind> tree_grid = default_grid_tree();
  std::vector<ClassifierKind> mlp_grid = default_grid_mlp();
  // k_outer == 0 skips nested CV and takes the first setting of each grid.
  std::size_t k_outer = 10;
  std::size_t k_inner = 10;
  double holdout_fraction = 0.3;
  double smoothing_alpha = 1.0;
  std::uint64_t seed = 1;
};

struct TrainReport {
  std::vector<ClassifierKind> chosen;
  // Empty when nested CV was skipped.
  std::vector<NestedCvResult> cv;
};

// Selects hyperparameters per kind, trains knn, tree and mlp on independently
// balanced subsamples and assembles the HMM.
ModelBundle train_bundle(const LabeledDataset& training, const FloorPlan& plan,
                         const TrainOptions& options, TrainReport* report = nullptr);

// Base predictors in bundle order plus the bundle's HMM.
PredictorSet make_predictor_set(const ModelBundle& bundle);

void save_bundle(std::ostream& out, const ModelBundle& bundle);
void save_bundle(const std::string& path, const ModelBundle& bundle);
ModelBundle load_bundle(std::istream& in, const std::string& source = "<stream>");
ModelBundle load_bundle(const std::string& path);

}  // namespace roomloc
