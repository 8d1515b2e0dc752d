#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "roomloc/matrix.hpp"
#include "roomloc/model.hpp"

namespace roomloc {

// --- Hyperparameters -------------------------------------------------------

// Distance-weighted k-nearest-neighbour learner.
struct KnnParams {
  int k = 5;
  bool distance_weighted = true;

  bool operator==(const KnnParams&) const = default;
};

// Gini decision tree with pessimistic-error (confidence factor) pruning.
struct TreeParams {
  int min_leaf = 2;
  double confidence = 0.25;

  bool operator==(const TreeParams&) const = default;
};

// Single-hidden-layer perceptron: logistic hidden units, softmax output,
// full-batch gradient descent with momentum for a fixed epoch budget.
struct MlpParams {
  int hidden = 10;
  double learning_rate = 0.5;
  double momentum = 0.9;
  int epochs = 600;
  std::uint64_t seed = 1;

  bool operator==(const MlpParams&) const = default;
};

using ClassifierKind = std::variant<KnnParams, TreeParams, MlpParams>;

// "knn", "tree" or "mlp".
std::string kind_name(const ClassifierKind& kind);
// Human-readable hyperparameter summary, e.g. "knn(k=5,weighted=1)".
std::string describe(const ClassifierKind& kind);
// Throws Error when a hyperparameter is outside its domain.
void validate_kind(const ClassifierKind& kind);

std::vector<ClassifierKind> default_grid_knn();
std::vector<ClassifierKind> default_grid_tree();
std::vector<ClassifierKind> default_grid_mlp();

// --- Confusion matrix ------------------------------------------------------

// Rows are true zones, columns predicted zones.
class ConfusionMatrix {
 public:
  ConfusionMatrix() = default;
  explicit ConfusionMatrix(std::size_t zones) : n_(zones), counts_(zones * zones, 0) {}
  static ConfusionMatrix from_rows(const std::vector<std::vector<std::size_t>>& rows);

  std::size_t zone_count() const { return n_; }
  void add(ZoneId truth, ZoneId predicted, std::size_t count = 1);
  std::size_t operator()(std::size_t truth, std::size_t predicted) const {
    return counts_[truth * n_ + predicted];
  }
  std::size_t row_sum(std::size_t truth) const;
  std::size_t col_sum(std::size_t predicted) const;
  std::size_t total() const;
  std::size_t trace() const;
  ConfusionMatrix& operator+=(const ConfusionMatrix& other);

  bool operator==(const ConfusionMatrix&) const = default;

 private:
  std::size_t n_ = 0;
  std::vector<std::size_t> counts_;
};

ConfusionMatrix confusion_from(std::span<const ZoneId> truth, std::span<const ZoneId> predicted,
                               std::size_t zones);

// Row i = (counts[i][j] + alpha) / (rowsum_i + alpha * n). The diagonal is
// the per-zone sensitivity TP / (TP + FN) when alpha = 0.
Matrix likelihood_rows(const ConfusionMatrix& cm, double smoothing_alpha);

// --- Fitted models ---------------------------------------------------------

struct Normalizer {
  std::vector<double> mean;
  std::vector<double> stddev;

  static Normalizer fit(const Matrix& features);
  std::vector<double> apply(std::span<const double> x) const;
  Matrix apply(const Matrix& features) const;

  bool operator==(const Normalizer&) const = default;
};

struct KnnModel {
  Matrix instances;  // normalized
  std::vector<ZoneId> labels;

  bool operator==(const KnnModel&) const = default;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;     // taken when x[feature] <= threshold
  int right = -1;
  ZoneId label = 0;  // majority class of the training samples reaching the node

  bool operator==(const TreeNode&) const = default;
};

struct TreeModel {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  std::size_t leaf_count() const;
  bool operator==(const TreeModel&) const = default;
};

struct MlpModel {
  Matrix w1;  // features x hidden
  std::vector<double> b1;
  Matrix w2;  // hidden x zones
  std::vector<double> b2;

  bool operator==(const MlpModel&) const = default;
};

using FittedModel = std::variant<KnnModel, TreeModel, MlpModel>;

struct TrainedClassifier {
  ClassifierKind kind;
  std::size_t zone_count = 0;
  std::size_t feature_count = 0;
  Normalizer norm;
  FittedModel model;
  ConfusionMatrix holdout_confusion;

  bool operator==(const TrainedClassifier&) const = default;
};

// Fits on raw (unnormalized) features; normalization stats come from these rows only.
// holdout_confusion is left empty.
TrainedClassifier fit(const ClassifierKind& kind, const Matrix& features,
                      std::span<const ZoneId> labels, std::size_t zone_count);

// Ties are broken toward the lowest zone id.
ZoneId predict_features(const TrainedClassifier& c, std::span<const double> x);
ZoneId predict(const TrainedClassifier& c, const Fingerprint& f);

// --- Training utilities ----------------------------------------------------

// Subsamples every zone without replacement down to the smallest class count.
LabeledDataset balance_dataset(const LabeledDataset& data, std::uint64_t seed);

// Balances, splits stratified into fit / holdout parts, fits, and records the
// holdout confusion matrix.
TrainedClassifier train(const ClassifierKind& kind, const LabeledDataset& data,
                        double holdout_fraction, std::uint64_t seed);

// Fold index per sample, stratified by zone.
std::vector<std::size_t> stratified_folds(std::span<const ZoneId> labels, std::size_t zones,
                                          std::size_t folds, std::uint64_t seed);

// Plain stratified k-fold accuracy, averaged over folds.
double cv_accuracy(const ClassifierKind& kind, const LabeledDataset& data, std::size_t folds,
                   std::uint64_t seed);

struct NestedCvResult {
  ClassifierKind best;
  std::size_t best_index = 0;
  double outer_accuracy = 0.0;                // mean over outer folds
  std::vector<double> fold_accuracies;        // per outer fold
  std::vector<std::size_t> chosen_per_fold;   // grid index chosen per outer fold
};

// Inner folds pick a grid setting per outer fold; the outer folds score that choice.
NestedCvResult nested_cv(const std::vector<ClassifierKind>& grid, const LabeledDataset& data,
                         std::size_t k_outer, std::size_t k_inner, std::uint64_t seed);

// Samples as a feature matrix plus label vector; throws on unlabeled samples.
Matrix feature_matrix(const LabeledDataset& data);
std::vector<ZoneId> label_vector(const LabeledDataset& data);

}  // namespace roomloc
