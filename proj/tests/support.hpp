#pragma once

// Reference implementations and generators shared by the unit tests and the
// acceptance binary.

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "roomloc/hmm.hpp"

namespace roomloc::testing {

// Random row-stochastic vector. With zero_chance > 0 some entries become
// exactly zero, but at least one entry stays positive.
inline std::vector<double> random_distribution(std::mt19937_64& rng, std::size_t n,
                                               double zero_chance = 0.0) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  std::bernoulli_distribution zero(zero_chance);
  std::vector<double> v(n);
  double sum = 0.0;
  for (auto& x : v) {
    x = zero(rng) ? 0.0 : u(rng);
    sum += x;
  }
  if (sum == 0.0) {
    v[std::uniform_int_distribution<std::size_t>(0, n - 1)(rng)] = 1.0;
    sum = 1.0;
  }
  for (auto& x : v) x /= sum;
  return v;
}

struct RandomCase {
  HmmModel model;
  std::vector<ObservationTuple> observations;
};

// n zones, m emitters, T steps. Transitions may contain structural zeros;
// pi and the emitters are strictly positive as HmmModel requires.
inline RandomCase random_case(std::mt19937_64& rng, std::size_t n, std::size_t m, std::size_t t) {
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < n; ++i) rows.push_back(random_distribution(rng, n, 0.3));
  std::vector<Matrix> emitters;
  for (std::size_t k = 0; k < m; ++k) {
    std::vector<std::vector<double>> e;
    for (std::size_t i = 0; i < n; ++i) e.push_back(random_distribution(rng, n));
    emitters.push_back(Matrix::from_rows(e));
  }
  HmmModel model(random_distribution(rng, n), TransitionMatrix(Matrix::from_rows(rows)), std::move(emitters));
  std::uniform_int_distribution<ZoneId> zone(0, static_cast<ZoneId>(n - 1));
  std::vector<ObservationTuple> obs(t, ObservationTuple(m));
  for (auto& o : obs) {
    for (auto& z : o) z = zone(rng);
  }
  return {std::move(model), std::move(obs)};
}

// Score of one path, accumulated in the same order the recursion uses so
// that exact ties stay exact.
inline double path_score(const HmmModel& model, const std::vector<ObservationTuple>& obs,
                         const std::vector<ZoneId>& path) {
  double s = 0.0;
  for (std::size_t t = 0; t < path.size(); ++t) {
    s = t == 0 ? model.log_pi(path[0]) : s + model.log_a(path[t - 1], path[t]);
    for (std::size_t k = 0; k < obs[t].size(); ++k) s += model.log_emitter(k, path[t], obs[t][k]);
  }
  return s;
}

struct BruteForceResult {
  double best_score = -std::numeric_limits<double>::infinity();
  std::vector<ZoneId> best_path;
  std::size_t optimal_paths = 0;  // paths whose score equals best_score exactly
};

// Enumerates all n^T paths. Among exactly tied optima the winner is the
// smallest path compared from the last step backwards: lowest final zone,
// then lowest predecessor, and so on.
inline BruteForceResult brute_force_viterbi(const HmmModel& model, const std::vector<ObservationTuple>& obs) {
  const std::size_t n = model.zone_count();
  const std::size_t t = obs.size();
  BruteForceResult r;
  std::vector<ZoneId> path(t, 0);
  auto reverse_less = [](const std::vector<ZoneId>& a, const std::vector<ZoneId>& b) {
    for (std::size_t i = a.size(); i-- > 0;) {
      if (a[i] != b[i]) return a[i] < b[i];
    }
    return false;
  };
  while (true) {
    const double s = path_score(model, obs, path);
    if (s > r.best_score) {
      r.best_score = s;
      r.best_path = path;
      r.optimal_paths = 1;
    } else if (s == r.best_score && s > -std::numeric_limits<double>::infinity()) {
      ++r.optimal_paths;
      if (reverse_less(path, r.best_path)) r.best_path = path;
    }
    std::size_t i = 0;
    while (i < t && ++path[i] == static_cast<ZoneId>(n)) path[i++] = 0;
    if (i == t) break;
  }
  return r;
}

}  // namespace roomloc::testing
