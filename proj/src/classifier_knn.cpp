#include <algorithm>
#include <cmath>
#include <numeric>

#include "classifier_internal.hpp"

namespace roomloc::detail {

KnnModel fit_knn(const KnnParams&, const Matrix& x, std::span<const ZoneId> y) {
  return KnnModel{x, std::vector<ZoneId>(y.begin(), y.end())};
}

ZoneId predict_knn(const KnnParams& p, const KnnModel& m, std::span<const double> x,
                   std::size_t zones) {
  const std::size_t n = m.instances.rows();
  std::vector<std::pair<double, std::size_t>> dist(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = m.instances.row(i);
    double d2 = 0.0;
    for (std::size_t j = 0; j < row.size(); ++j) {
      const double d = row[j] - x[j];
      d2 += d * d;
    }
    dist[i] = {d2, i};
  }
  const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(p.k), n);
  // Pair ordering breaks distance ties by instance index.
  std::partial_sort(dist.begin(), dist.begin() + k, dist.end());

  std::vector<double> votes(zones, 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    const double w = p.distance_weighted ? 1.0 / std::max(std::sqrt(dist[i].first), 1e-9) : 1.0;
    votes[m.labels[dist[i].second]] += w;
  }
  return argmax_lowest(votes);
}

}  // namespace roomloc::detail
