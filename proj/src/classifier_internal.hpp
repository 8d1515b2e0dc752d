#pragma once

#include <span>
#include <vector>

#include "roomloc/classifiers.hpp"

namespace roomloc::detail {

// All fit_* functions receive normalized features.

KnnModel fit_knn(const KnnParams& p, const Matrix& x, std::span<const ZoneId> y);
ZoneId predict_knn(const KnnParams& p, const KnnModel& m, std::span<const double> x,
                   std::size_t zones);

TreeModel fit_tree(const TreeParams& p, const Matrix& x, std::span<const ZoneId> y,
                   std::size_t zones);
ZoneId predict_tree(const TreeModel& m, std::span<const double> x);
// Upper confidence bound on extra errors at a node of n samples with e errors.
double pessimistic_extra_errors(double n, double e, double confidence);

MlpModel fit_mlp(const MlpParams& p, const Matrix& x, std::span<const ZoneId> y,
                 std::size_t zones);
ZoneId predict_mlp(const MlpModel& m, std::span<const double> x);

// Index of the largest value; first wins on ties.
template <typename T>
ZoneId argmax_lowest(const std::vector<T>& v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return static_cast<ZoneId>(best);
}

}  // namespace roomloc::detail
