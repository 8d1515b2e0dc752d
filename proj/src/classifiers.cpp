#include "roomloc/classifiers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "classifier_internal.hpp"
#include "roomloc/error.hpp"

namespace roomloc {
namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

struct Subset {
  Matrix x;
  std::vector<ZoneId> y;
};

Subset take(const Matrix& x, std::span<const ZoneId> y, std::span<const std::size_t> idx) {
  Subset s{Matrix(idx.size(), x.cols()), {}};
  s.y.reserve(idx.size());
  for (std::size_t r = 0; r < idx.size(); ++r) {
    const auto src = x.row(idx[r]);
    std::copy(src.begin(), src.end(), s.x.row(r).begin());
    s.y.push_back(y[idx[r]]);
  }
  return s;
}

double holdout_accuracy(const ClassifierKind& kind, const Subset& fit_part, const Subset& test_part,
                        std::size_t zones) {
  const auto c = fit(kind, fit_part.x, fit_part.y, zones);
  std::size_t hits = 0;
  for (std::size_t r = 0; r < test_part.x.rows(); ++r) {
    if (predict_features(c, test_part.x.row(r)) == test_part.y[r]) ++hits;
  }
  return test_part.x.rows() ? static_cast<double>(hits) / static_cast<double>(test_part.x.rows()) : 0.0;
}

// Mean accuracy over folds of (x, y) under a given fold assignment.
double fold_mean_accuracy(const ClassifierKind& kind, const Matrix& x, std::span<const ZoneId> y,
                          std::span<const std::size_t> fold_of, std::size_t folds, std::size_t zones) {
  double sum = 0.0;
  for (std::size_t f = 0; f < folds; ++f) {
    std::vector<std::size_t> tr, te;
    for (std::size_t i = 0; i < fold_of.size(); ++i) (fold_of[i] == f ? te : tr).push_back(i);
    sum += holdout_accuracy(kind, take(x, y, tr), take(x, y, te), zones);
  }
  return sum / static_cast<double>(folds);
}

void require_min_per_zone(std::span<const ZoneId> y, std::size_t zones, std::size_t min,
                          const std::string& what) {
  std::vector<std::size_t> counts(zones, 0);
  for (auto z : y) ++counts[z];
  for (std::size_t z = 0; z < zones; ++z) {
    if (counts[z] < min) {
      throw Error("zone " + std::to_string(z) + " has " + std::to_string(counts[z]) +
                  " samples, " + what + " needs at least " + std::to_string(min));
    }
  }
}

}  // namespace

std::string kind_name(const ClassifierKind& kind) {
  return std::visit(overloaded{[](const KnnParams&) { return std::string("knn"); },
                               [](const TreeParams&) { return std::string("tree"); },
                               [](const MlpParams&) { return std::string("mlp"); }},
                    kind);
}

std::string describe(const ClassifierKind& kind) {
  std::ostringstream s;
  std::visit(overloaded{[&](const KnnParams& p) {
                          s << "knn(k=" << p.k << ",weighted=" << p.distance_weighted << ")";
                        },
                        [&](const TreeParams& p) {
                          s << "tree(min_leaf=" << p.min_leaf
                            << ",confidence=" << format_double(p.confidence) << ")";
                        },
                        [&](const MlpParams& p) {
                          s << "mlp(hidden=" << p.hidden << ",lr=" << format_double(p.learning_rate)
                            << ",momentum=" << format_double(p.momentum) << ",epochs=" << p.epochs
                            << ",seed=" << p.seed << ")";
                        }},
             kind);
  return s.str();
}

void validate_kind(const ClassifierKind& kind) {
  std::visit(overloaded{[](const KnnParams& p) {
                          if (p.k < 1) throw Error("knn: k must be >= 1");
                        },
                        [](const TreeParams& p) {
                          if (p.min_leaf < 1) throw Error("tree: min_leaf must be >= 1");
                          if (!(p.confidence > 0.0 && p.confidence < 1.0)) {
                            throw Error("tree: confidence must lie in (0, 1)");
                          }
                        },
                        [](const MlpParams& p) {
                          if (p.hidden < 1) throw Error("mlp: hidden width must be >= 1");
                          if (!(p.learning_rate > 0.0)) throw Error("mlp: learning rate must be > 0");
                          if (!(p.momentum >= 0.0 && p.momentum < 1.0)) {
                            throw Error("mlp: momentum must lie in [0, 1)");
                          }
                          if (p.epochs < 0) throw Error("mlp: epochs must be >= 0");
                        }},
             kind);
}

std::vector<ClassifierKind> default_grid_knn() {
  return {KnnParams{1, true}, KnnParams{3, true}, KnnParams{5, true}, KnnParams{7, true}};
}

std::vector<ClassifierKind> default_grid_tree() {
  return {TreeParams{2, 0.1}, TreeParams{2, 0.25}, TreeParams{2, 0.5}};
}

std::vector<ClassifierKind> default_grid_mlp() {
  std::vector<ClassifierKind> g;
  for (int h : {5, 10, 20}) {
    MlpParams p;
    p.hidden = h;
    g.emplace_back(p);
  }
  return g;
}

// --- ConfusionMatrix -------------------------------------------------------

ConfusionMatrix ConfusionMatrix::from_rows(const std::vector<std::vector<std::size_t>>& rows) {
  ConfusionMatrix cm(rows.size());
  for (std::size_t t = 0; t < rows.size(); ++t) {
    if (rows[t].size() != rows.size()) throw Error("confusion matrix must be square");
    for (std::size_t p = 0; p < rows.size(); ++p) cm.counts_[t * cm.n_ + p] = rows[t][p];
  }
  return cm;
}

void ConfusionMatrix::add(ZoneId truth, ZoneId predicted, std::size_t count) {
  if (truth < 0 || predicted < 0 || static_cast<std::size_t>(truth) >= n_ ||
      static_cast<std::size_t>(predicted) >= n_) {
    throw Error("confusion matrix zone out of range");
  }
  counts_[truth * n_ + predicted] += count;
}

std::size_t ConfusionMatrix::row_sum(std::size_t truth) const {
  std::size_t s = 0;
  for (std::size_t p = 0; p < n_; ++p) s += (*this)(truth, p);
  return s;
}

std::size_t ConfusionMatrix::col_sum(std::size_t predicted) const {
  std::size_t s = 0;
  for (std::size_t t = 0; t < n_; ++t) s += (*this)(t, predicted);
  return s;
}

std::size_t ConfusionMatrix::total() const {
  return std::accumulate(counts_.begin(), counts_.end(), std::size_t{0});
}

std::size_t ConfusionMatrix::trace() const {
  std::size_t s = 0;
  for (std::size_t i = 0; i < n_; ++i) s += (*this)(i, i);
  return s;
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
  if (other.n_ != n_) throw Error("confusion matrix size mismatch");
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
  return *this;
}

ConfusionMatrix confusion_from(std::span<const ZoneId> truth, std::span<const ZoneId> predicted,
                               std::size_t zones) {
  if (truth.size() != predicted.size()) throw Error("truth/prediction length mismatch");
  ConfusionMatrix cm(zones);
  for (std::size_t i = 0; i < truth.size(); ++i) cm.add(truth[i], predicted[i]);
  return cm;
}

Matrix likelihood_rows(const ConfusionMatrix& cm, double smoothing_alpha) {
  if (!(smoothing_alpha >= 0.0)) throw Error("smoothing alpha must be >= 0");
  const std::size_t n = cm.zone_count();
  Matrix out(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const double denom = static_cast<double>(cm.row_sum(i)) + smoothing_alpha * static_cast<double>(n);
    if (denom == 0.0) throw Error("no holdout samples for zone " + std::to_string(i));
    for (std::size_t j = 0; j < n; ++j) {
      out(i, j) = (static_cast<double>(cm(i, j)) + smoothing_alpha) / denom;
    }
  }
  return out;
}

// --- Normalizer ------------------------------------------------------------

Normalizer Normalizer::fit(const Matrix& features) {
  Normalizer nz;
  const std::size_t n = features.rows(), d = features.cols();
  nz.mean.assign(d, 0.0);
  nz.stddev.assign(d, 1.0);
  if (n == 0) return nz;
  for (std::size_t j = 0; j < d; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += features(i, j);
    const double m = s / static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) ss += (features(i, j) - m) * (features(i, j) - m);
    const double sd = std::sqrt(ss / static_cast<double>(n));
    nz.mean[j] = m;
    // Constant features pass through centred but unscaled.
    nz.stddev[j] = sd > 1e-12 ? sd : 1.0;
  }
  return nz;
}

std::vector<double> Normalizer::apply(std::span<const double> x) const {
  std::vector<double> out(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) out[j] = (x[j] - mean[j]) / stddev[j];
  return out;
}

Matrix Normalizer::apply(const Matrix& features) const {
  Matrix out(features.rows(), features.cols());
  for (std::size_t i = 0; i < features.rows(); ++i) {
    for (std::size_t j = 0; j < features.cols(); ++j) {
      out(i, j) = (features(i, j) - mean[j]) / stddev[j];
    }
  }
  return out;
}

// --- Fit / predict ---------------------------------------------------------

TrainedClassifier fit(const ClassifierKind& kind, const Matrix& features,
                      std::span<const ZoneId> labels, std::size_t zone_count) {
  validate_kind(kind);
  if (features.rows() != labels.size()) throw Error("feature/label count mismatch");
  if (features.rows() == 0) throw Error("cannot fit on an empty training set");
  if (zone_count == 0) throw Error("zone count must be positive");
  for (auto z : labels) {
    if (z < 0 || static_cast<std::size_t>(z) >= zone_count) {
      throw Error("training label " + std::to_string(z) + " out of range");
    }
  }
  TrainedClassifier c;
  c.kind = kind;
  c.zone_count = zone_count;
  c.feature_count = features.cols();
  c.norm = Normalizer::fit(features);
  const Matrix x = c.norm.apply(features);
  c.model = std::visit(
      overloaded{[&](const KnnParams& p) -> FittedModel { return detail::fit_knn(p, x, labels); },
                 [&](const TreeParams& p) -> FittedModel {
                   return detail::fit_tree(p, x, labels, zone_count);
                 },
                 [&](const MlpParams& p) -> FittedModel {
                   return detail::fit_mlp(p, x, labels, zone_count);
                 }},
      kind);
  return c;
}

ZoneId predict_features(const TrainedClassifier& c, std::span<const double> x) {
  if (x.size() != c.feature_count) {
    throw Error("feature dimension " + std::to_string(x.size()) + " != trained dimension " +
                std::to_string(c.feature_count));
  }
  const auto xn = c.norm.apply(x);
  if (const auto* knn = std::get_if<KnnModel>(&c.model)) {
    return detail::predict_knn(std::get<KnnParams>(c.kind), *knn, xn, c.zone_count);
  }
  if (const auto* tree = std::get_if<TreeModel>(&c.model)) return detail::predict_tree(*tree, xn);
  return detail::predict_mlp(std::get<MlpModel>(c.model), xn);
}

ZoneId predict(const TrainedClassifier& c, const Fingerprint& f) {
  return predict_features(c, feature_vector(f));
}

// --- Training utilities ----------------------------------------------------

Matrix feature_matrix(const LabeledDataset& data) {
  const std::size_t d = data.anchor_count + kMfFeatures;
  Matrix x(data.samples.size(), d);
  for (std::size_t i = 0; i < data.samples.size(); ++i) {
    const auto& s = data.samples[i];
    if (s.rssi.size() != data.anchor_count) {
      throw Error("sample " + std::to_string(i) + " has " + std::to_string(s.rssi.size()) +
                  " rssi values, dataset declares " + std::to_string(data.anchor_count));
    }
    const auto f = feature_vector(s);
    std::copy(f.begin(), f.end(), x.row(i).begin());
  }
  return x;
}

std::vector<ZoneId> label_vector(const LabeledDataset& data) {
  std::vector<ZoneId> y;
  y.reserve(data.samples.size());
  for (std::size_t i = 0; i < data.samples.size(); ++i) {
    const auto& l = data.samples[i].label;
    if (!l) throw Error("sample " + std::to_string(i) + " has no zone label");
    if (*l < 0 || static_cast<std::size_t>(*l) >= data.zone_count) {
      throw Error("sample " + std::to_string(i) + " label out of range");
    }
    y.push_back(*l);
  }
  return y;
}

LabeledDataset balance_dataset(const LabeledDataset& data, std::uint64_t seed) {
  const auto y = label_vector(data);
  std::vector<std::vector<std::size_t>> by_zone(data.zone_count);
  for (std::size_t i = 0; i < y.size(); ++i) by_zone[y[i]].push_back(i);
  std::size_t min_count = y.size();
  for (std::size_t z = 0; z < data.zone_count; ++z) {
    if (by_zone[z].empty()) throw Error("zone " + std::to_string(z) + " has no samples");
    min_count = std::min(min_count, by_zone[z].size());
  }
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> keep;
  for (auto& idx : by_zone) {
    std::shuffle(idx.begin(), idx.end(), rng);
    keep.insert(keep.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(min_count));
  }
  std::shuffle(keep.begin(), keep.end(), rng);
  LabeledDataset out{data.anchor_count, data.zone_count, {}};
  out.samples.reserve(keep.size());
  for (auto i : keep) out.samples.push_back(data.samples[i]);
  return out;
}

TrainedClassifier train(const ClassifierKind& kind, const LabeledDataset& data,
                        double holdout_fraction, std::uint64_t seed) {
  if (!(holdout_fraction > 0.0 && holdout_fraction <= 0.5)) {
    throw Error("holdout fraction must lie in (0, 0.5]");
  }
  const auto balanced = balance_dataset(data, seed);
  const Matrix x = feature_matrix(balanced);
  const auto y = label_vector(balanced);

  // balance_dataset already shuffled, so the first rows of each zone form a random holdout.
  const std::size_t per_zone = y.size() / balanced.zone_count;
  const auto holdout_n = static_cast<std::size_t>(std::llround(holdout_fraction * static_cast<double>(per_zone)));
  if (holdout_n < 2 || per_zone - holdout_n < 2) {
    throw Error("fewer than 2 samples per zone after the holdout split (" +
                std::to_string(per_zone) + " per zone)");
  }
  std::vector<std::size_t> seen(balanced.zone_count, 0), fit_idx, hold_idx;
  for (std::size_t i = 0; i < y.size(); ++i) {
    (seen[y[i]]++ < holdout_n ? hold_idx : fit_idx).push_back(i);
  }
  const auto fit_part = take(x, y, fit_idx);
  const auto hold_part = take(x, y, hold_idx);

  auto c = fit(kind, fit_part.x, fit_part.y, balanced.zone_count);
  c.holdout_confusion = ConfusionMatrix(balanced.zone_count);
  for (std::size_t r = 0; r < hold_part.x.rows(); ++r) {
    c.holdout_confusion.add(hold_part.y[r], predict_features(c, hold_part.x.row(r)));
  }
  return c;
}

std::vector<std::size_t> stratified_folds(std::span<const ZoneId> labels, std::size_t zones,
                                          std::size_t folds, std::uint64_t seed) {
  if (folds < 2) throw Error("need at least 2 folds");
  std::vector<std::vector<std::size_t>> by_zone(zones);
  for (std::size_t i = 0; i < labels.size(); ++i) by_zone[labels[i]].push_back(i);
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> fold_of(labels.size(), 0);
  // Continuing the round-robin across zones keeps fold sizes within one of each other.
  std::size_t next = 0;
  for (auto& idx : by_zone) {
    std::shuffle(idx.begin(), idx.end(), rng);
    for (auto i : idx) fold_of[i] = next++ % folds;
  }
  return fold_of;
}

double cv_accuracy(const ClassifierKind& kind, const LabeledDataset& data, std::size_t folds,
                   std::uint64_t seed) {
  const Matrix x = feature_matrix(data);
  const auto y = label_vector(data);
  require_min_per_zone(y, data.zone_count, folds, std::to_string(folds) + "-fold CV");
  const auto fold_of = stratified_folds(y, data.zone_count, folds, seed);
  return fold_mean_accuracy(kind, x, y, fold_of, folds, data.zone_count);
}

NestedCvResult nested_cv(const std::vector<ClassifierKind>& grid, const LabeledDataset& data,
                         std::size_t k_outer, std::size_t k_inner, std::uint64_t seed) {
  if (grid.empty()) throw Error("hyperparameter grid is empty");
  if (k_outer < 2 || k_inner < 2) throw Error("nested CV needs k_outer, k_inner >= 2");
  for (const auto& g : grid) {
    validate_kind(g);
    if (g.index() != grid.front().index()) throw Error("grid mixes classifier kinds");
  }
  const Matrix x = feature_matrix(data);
  const auto y = label_vector(data);
  const std::size_t zones = data.zone_count;
  require_min_per_zone(y, zones, k_outer, "outer CV");

  const auto outer = stratified_folds(y, zones, k_outer, seed);
  NestedCvResult res;
  for (std::size_t f = 0; f < k_outer; ++f) {
    std::vector<std::size_t> tr, te;
    for (std::size_t i = 0; i < outer.size(); ++i) (outer[i] == f ? te : tr).push_back(i);
    const auto train_part = take(x, y, tr);
    const auto test_part = take(x, y, te);

    std::size_t chosen = 0;
    if (grid.size() > 1) {
      require_min_per_zone(train_part.y, zones, k_inner, "inner CV");
      const auto inner = stratified_folds(train_part.y, zones, k_inner, seed + 1 + f);
      double best = -1.0;
      for (std::size_t g = 0; g < grid.size(); ++g) {
        const double acc = fold_mean_accuracy(grid[g], train_part.x, train_part.y, inner, k_inner, zones);
        if (acc > best) {
          best = acc;
          chosen = g;
        }
      }
    }
    res.chosen_per_fold.push_back(chosen);
    res.fold_accuracies.push_back(holdout_accuracy(grid[chosen], train_part, test_part, zones));
  }

  std::vector<std::size_t> votes(grid.size(), 0);
  for (auto c : res.chosen_per_fold) ++votes[c];
  res.best_index = static_cast<std::size_t>(detail::argmax_lowest(votes));
  res.best = grid[res.best_index];
  res.outer_accuracy = std::accumulate(res.fold_accuracies.begin(), res.fold_accuracies.end(), 0.0) /
                       static_cast<double>(k_outer);
  return res;
}

}  // namespace roomloc
