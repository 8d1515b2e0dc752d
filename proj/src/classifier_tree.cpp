#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/distributions/normal.hpp>

#include "classifier_internal.hpp"

namespace roomloc {

std::size_t TreeModel::leaf_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.feature < 0; }));
}

namespace detail {
namespace {

struct Builder {
  const TreeParams& params;
  const Matrix& x;
  std::span<const ZoneId> y;
  std::size_t zones;
  std::vector<TreeNode> nodes;
  // Per node: training samples reaching it and how many of them the majority label misses.
  std::vector<double> node_samples;
  std::vector<double> node_errors;

  std::vector<std::size_t> counts_of(std::span<const std::size_t> idx) const {
    std::vector<std::size_t> c(zones, 0);
    for (auto i : idx) ++c[y[i]];
    return c;
  }

  static double gini(const std::vector<std::size_t>& c, std::size_t total) {
    if (total == 0) return 0.0;
    double s = 0.0;
    for (auto v : c) {
      const double p = static_cast<double>(v) / static_cast<double>(total);
      s += p * p;
    }
    return 1.0 - s;
  }

  int build(std::vector<std::size_t> idx) {
    const int id = static_cast<int>(nodes.size());
    const auto counts = counts_of(idx);
    TreeNode node;
    node.label = argmax_lowest(counts);
    nodes.push_back(node);
    node_samples.push_back(static_cast<double>(idx.size()));
    node_errors.push_back(static_cast<double>(idx.size() - counts[node.label]));

    const auto min_leaf = static_cast<std::size_t>(params.min_leaf);
    if (counts[node.label] == idx.size() || idx.size() < 2 * min_leaf) return id;

    const double parent_impurity = gini(counts, idx.size());
    double best_gain = 1e-12;
    int best_feature = -1;
    double best_threshold = 0.0;

    std::vector<std::size_t> order(idx);
    for (std::size_t f = 0; f < x.cols(); ++f) {
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return x(a, f) < x(b, f); });
      std::vector<std::size_t> left(zones, 0);
      std::vector<std::size_t> right = counts;
      for (std::size_t i = 0; i + 1 < order.size(); ++i) {
        ++left[y[order[i]]];
        --right[y[order[i]]];
        const std::size_t nl = i + 1, nr = order.size() - nl;
        const double lo = x(order[i], f), hi = x(order[i + 1], f);
        if (nl < min_leaf || nr < min_leaf || !(lo < hi)) continue;
        const double n = static_cast<double>(order.size());
        const double impurity = (static_cast<double>(nl) * gini(left, nl) +
                                 static_cast<double>(nr) * gini(right, nr)) / n;
        const double gain = parent_impurity - impurity;
        if (gain > best_gain) {
          best_gain = gain;
          best_feature = static_cast<int>(f);
          best_threshold = lo + (hi - lo) / 2.0;
        }
      }
    }
    if (best_feature < 0) return id;

    std::vector<std::size_t> li, ri;
    for (auto i : idx) (x(i, best_feature) <= best_threshold ? li : ri).push_back(i);
    idx.clear();
    idx.shrink_to_fit();
    const int l = build(std::move(li));
    const int r = build(std::move(ri));
    nodes[id].feature = best_feature;
    nodes[id].threshold = best_threshold;
    nodes[id].left = l;
    nodes[id].right = r;
    return id;
  }

  // Estimated errors of the (possibly pruned) subtree rooted at id.
  double prune(int id) {
    auto& n = nodes[id];
    const double as_leaf =
        node_errors[id] + pessimistic_extra_errors(node_samples[id], node_errors[id], params.confidence);
    if (n.feature < 0) return as_leaf;
    const double as_tree = prune(n.left) + prune(n.right);
    if (as_leaf <= as_tree + 0.1) {
      nodes[id].feature = -1;
      nodes[id].left = nodes[id].right = -1;
      return as_leaf;
    }
    return as_tree;
  }

  // Drops nodes orphaned by pruning and renumbers in pre-order.
  std::vector<TreeNode> compact() const {
    std::vector<TreeNode> out;
    compact_into(0, out);
    return out;
  }

  int compact_into(int id, std::vector<TreeNode>& out) const {
    const int nid = static_cast<int>(out.size());
    out.push_back(nodes[id]);
    if (nodes[id].feature >= 0) {
      const int l = compact_into(nodes[id].left, out);
      const int r = compact_into(nodes[id].right, out);
      out[nid].left = l;
      out[nid].right = r;
    }
    return nid;
  }
};

}  // namespace

double pessimistic_extra_errors(double n, double e, double confidence) {
  if (n <= 0.0) return 0.0;
  if (e < 1.0) {
    // Exact binomial bound for zero errors, interpolated up to one error.
    const double base = n * (1.0 - std::pow(confidence, 1.0 / n));
    if (e == 0.0) return base;
    return base + e * (pessimistic_extra_errors(n, 1.0, confidence) - base);
  }
  if (e + 0.5 >= n) return std::max(n - e, 0.0);
  const boost::math::normal_distribution<double> unit;
  const double z = boost::math::quantile(boost::math::complement(unit, confidence));
  const double f = (e + 0.5) / n;
  const double r = (f + z * z / (2.0 * n) +
                    z * std::sqrt(std::max(f / n - f * f / n + z * z / (4.0 * n * n), 0.0))) /
                   (1.0 + z * z / n);
  return std::max(r * n - e, 0.0);
}

TreeModel fit_tree(const TreeParams& p, const Matrix& x, std::span<const ZoneId> y,
                   std::size_t zones) {
  Builder b{p, x, y, zones, {}, {}, {}};
  std::vector<std::size_t> idx(x.rows());
  std::iota(idx.begin(), idx.end(), 0);
  b.build(std::move(idx));
  b.prune(0);
  return TreeModel{b.compact()};
}

ZoneId predict_tree(const TreeModel& m, std::span<const double> x) {
  int id = 0;
  while (m.nodes[id].feature >= 0) {
    const auto& n = m.nodes[id];
    id = x[n.feature] <= n.threshold ? n.left : n.right;
  }
  return m.nodes[id].label;
}

}  // namespace detail
}  // namespace roomloc
