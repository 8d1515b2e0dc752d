#include <algorithm>
#include <cmath>
#include <random>

#include "classifier_internal.hpp"

namespace roomloc::detail {
namespace {

double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

// Uniform in [-r, r] from the raw 53 high bits, so weights do not depend on
// the standard library's distribution implementation.
double uniform_symmetric(std::mt19937_64& rng, double r) {
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return (2.0 * u - 1.0) * r;
}

void hidden_layer(const MlpModel& m, std::span<const double> x, std::vector<double>& h) {
  const std::size_t hidden = m.b1.size();
  h.assign(m.b1.begin(), m.b1.end());
  for (std::size_t j = 0; j < x.size(); ++j) {
    const auto w = m.w1.row(j);
    for (std::size_t k = 0; k < hidden; ++k) h[k] += x[j] * w[k];
  }
  for (auto& v : h) v = sigmoid(v);
}

void output_logits(const MlpModel& m, const std::vector<double>& h, std::vector<double>& z) {
  const std::size_t zones = m.b2.size();
  z.assign(m.b2.begin(), m.b2.end());
  for (std::size_t k = 0; k < h.size(); ++k) {
    const auto w = m.w2.row(k);
    for (std::size_t c = 0; c < zones; ++c) z[c] += h[k] * w[c];
  }
}

}  // namespace

MlpModel fit_mlp(const MlpParams& p, const Matrix& x, std::span<const ZoneId> y,
                 std::size_t zones) {
  const std::size_t n = x.rows(), d = x.cols(), hidden = static_cast<std::size_t>(p.hidden);
  std::mt19937_64 rng(p.seed);
  MlpModel m{Matrix(d, hidden), std::vector<double>(hidden, 0.0), Matrix(hidden, zones),
             std::vector<double>(zones, 0.0)};
  const double r1 = std::sqrt(6.0 / static_cast<double>(d + hidden));
  const double r2 = std::sqrt(6.0 / static_cast<double>(hidden + zones));
  for (auto& w : m.w1.data()) w = uniform_symmetric(rng, r1);
  for (auto& w : m.w2.data()) w = uniform_symmetric(rng, r2);
  if (n == 0) return m;

  Matrix v1(d, hidden), v2(hidden, zones);
  std::vector<double> vb1(hidden, 0.0), vb2(zones, 0.0);
  Matrix g1(d, hidden), g2(hidden, zones);
  std::vector<double> gb1(hidden), gb2(zones);
  std::vector<double> h, z, dz(zones), dh(hidden);
  const double inv_n = 1.0 / static_cast<double>(n);

  for (int epoch = 0; epoch < p.epochs; ++epoch) {
    std::fill(g1.data().begin(), g1.data().end(), 0.0);
    std::fill(g2.data().begin(), g2.data().end(), 0.0);
    std::fill(gb1.begin(), gb1.end(), 0.0);
    std::fill(gb2.begin(), gb2.end(), 0.0);

    for (std::size_t i = 0; i < n; ++i) {
      const auto xi = x.row(i);
      hidden_layer(m, xi, h);
      output_logits(m, h, z);
      const double zmax = *std::max_element(z.begin(), z.end());
      double sum = 0.0;
      for (auto& v : z) sum += (v = std::exp(v - zmax));
      // Softmax + cross-entropy gradient w.r.t. logits.
      for (std::size_t c = 0; c < zones; ++c) {
        dz[c] = (z[c] / sum - (static_cast<ZoneId>(c) == y[i] ? 1.0 : 0.0)) * inv_n;
        gb2[c] += dz[c];
      }
      for (std::size_t k = 0; k < hidden; ++k) {
        const auto w = m.w2.row(k);
        auto g = g2.row(k);
        double back = 0.0;
        for (std::size_t c = 0; c < zones; ++c) {
          g[c] += h[k] * dz[c];
          back += w[c] * dz[c];
        }
        dh[k] = back * h[k] * (1.0 - h[k]);
        gb1[k] += dh[k];
      }
      for (std::size_t j = 0; j < d; ++j) {
        auto g = g1.row(j);
        for (std::size_t k = 0; k < hidden; ++k) g[k] += xi[j] * dh[k];
      }
    }

    auto step = [&](std::vector<double>& w, std::vector<double>& v, const std::vector<double>& g) {
      for (std::size_t i = 0; i < w.size(); ++i) {
        v[i] = p.momentum * v[i] - p.learning_rate * g[i];
        w[i] += v[i];
      }
    };
    step(m.w1.data(), v1.data(), g1.data());
    step(m.w2.data(), v2.data(), g2.data());
    step(m.b1, vb1, gb1);
    step(m.b2, vb2, gb2);
  }
  return m;
}

ZoneId predict_mlp(const MlpModel& m, std::span<const double> x) {
  std::vector<double> h, z;
  hidden_layer(m, x, h);
  output_logits(m, h, z);
  return argmax_lowest(z);
}

}  // namespace roomloc::detail
