#include "roomloc/hmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include "roomloc/error.hpp"

namespace roomloc {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_distribution(std::span<const double> row, const std::string& what) {
  double sum = 0.0;
  for (double v : row) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw Error(what + " has a negative or non-finite entry");
    sum += v;
  }
  if (std::abs(sum - 1.0) > kStochasticTolerance) {
    throw Error(what + " sums to " + format_double(sum) + ", not 1");
  }
}

double safe_log(double p) { return p > 0.0 ? std::log(p) : kNegInf; }

void check_tuple(const HmmModel& model, const ObservationTuple& obs) {
  if (obs.size() != model.emitter_count()) {
    throw Error("observation tuple has " + std::to_string(obs.size()) + " entries, model has " +
                std::to_string(model.emitter_count()) + " emitters");
  }
  for (auto o : obs) {
    if (o < 0 || static_cast<std::size_t>(o) >= model.zone_count()) {
      throw Error("observed zone " + std::to_string(o) + " out of range");
    }
  }
}

}  // namespace

TransitionMatrix::TransitionMatrix(Matrix a) : a_(std::move(a)) {
  if (a_.rows() == 0 || a_.rows() != a_.cols()) throw Error("transition matrix must be square and non-empty");
  for (std::size_t r = 0; r < a_.rows(); ++r) check_distribution(a_.row(r), "transition row " + std::to_string(r));
}

TransitionMatrix transitions_from_floor_plan(const FloorPlan& plan, std::vector<std::string>* warnings) {
  const auto violations = validate_floor_plan(plan);
  if (!violations.empty()) throw Error("invalid floor plan: " + violations.front());
  const std::size_t n = plan.zone_count();
  const auto adj = plan.neighbors();

  if (plan.explicit_transitions) {
    const Matrix& m = *plan.explicit_transitions;
    TransitionMatrix a(m);
    if (warnings) {
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          if (i == j || m(i, j) <= 0.0) continue;
          if (std::find(adj[i].begin(), adj[i].end(), static_cast<ZoneId>(j)) == adj[i].end()) {
            warnings->push_back("explicit transition " + std::to_string(i) + "->" + std::to_string(j) +
                                " is positive but the plan has no such edge");
          }
        }
      }
    }
    return a;
  }

  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    if (adj[i].empty()) {
      m(i, i) = 1.0;
      continue;
    }
    const double stay = plan.stay_prob[i];
    m(i, i) = stay;
    const double move = (1.0 - stay) / static_cast<double>(adj[i].size());
    for (ZoneId j : adj[i]) m(i, j) = move;
  }
  return TransitionMatrix(std::move(m));
}

std::vector<double> initial_distribution(std::size_t zones, std::optional<ZoneId> start_zone) {
  if (zones == 0) throw Error("initial distribution needs at least one zone");
  std::vector<double> pi(zones, 1.0 / static_cast<double>(zones));
  if (!start_zone || zones == 1) return pi;
  if (*start_zone < 0 || static_cast<std::size_t>(*start_zone) >= zones) throw Error("start zone out of range");
  const double rest = 0.1 / static_cast<double>(zones - 1);
  for (auto& p : pi) p = rest;
  pi[*start_zone] = 0.9;
  const double sum = std::accumulate(pi.begin(), pi.end(), 0.0);
  for (auto& p : pi) p /= sum;
  return pi;
}

HmmModel::HmmModel(std::vector<double> pi, TransitionMatrix a, std::vector<Matrix> emitters)
    : pi_(std::move(pi)), a_(std::move(a)), emitters_(std::move(emitters)) {
  const std::size_t n = pi_.size();
  if (n != a_.zone_count()) throw Error("pi and transition matrix disagree on zone count");
  check_distribution(pi_, "pi");
  for (std::size_t z = 0; z < n; ++z) {
    if (!(pi_[z] > 0.0)) throw Error("pi must be strictly positive (zone " + std::to_string(z) + ")");
  }
  if (emitters_.empty()) throw Error("model needs at least one emitter");
  for (std::size_t k = 0; k < emitters_.size(); ++k) {
    const auto& e = emitters_[k];
    if (e.rows() != n || e.cols() != n) throw Error("emitter " + std::to_string(k) + " is not n x n");
    for (std::size_t r = 0; r < n; ++r) {
      check_distribution(e.row(r), "emitter " + std::to_string(k) + " row " + std::to_string(r));
      for (double v : e.row(r)) {
        if (!(v > 0.0)) {
          throw Error("emitter " + std::to_string(k) + " row " + std::to_string(r) + " has a zero entry");
        }
      }
    }
  }
  for (double p : pi_) log_pi_.push_back(std::log(p));
  log_a_ = Matrix(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) log_a_(i, j) = safe_log(a_(i, j));
  }
  for (const auto& e : emitters_) {
    Matrix l(n, n);
    for (std::size_t i = 0; i < n * n; ++i) l.data()[i] = std::log(e.data()[i]);
    log_emitters_.push_back(std::move(l));
  }
}

double emission_log_likelihood(const HmmModel& model, const ObservationTuple& obs, ZoneId zone) {
  check_tuple(model, obs);
  if (zone < 0 || static_cast<std::size_t>(zone) >= model.zone_count()) throw Error("zone out of range");
  double s = 0.0;
  for (std::size_t k = 0; k < obs.size(); ++k) s += model.log_emitter(k, zone, obs[k]);
  return s;
}

TrackerState tracker_init(const HmmModel& model) {
  TrackerState s;
  for (std::size_t z = 0; z < model.zone_count(); ++z) s.scores.push_back(model.log_pi(z));
  return s;
}

ZoneId tracker_step(TrackerState& state, const HmmModel& model, const ObservationTuple& obs) {
  check_tuple(model, obs);
  const std::size_t n = model.zone_count();
  if (state.scores.size() != n) throw Error("tracker state does not belong to this model");
  std::vector<double> next(n);
  if (state.steps == 0) {
    for (std::size_t z = 0; z < n; ++z) next[z] = state.scores[z];
  } else {
    std::vector<ZoneId> back(n, 0);
    for (std::size_t j = 0; j < n; ++j) {
      double best = kNegInf;
      for (std::size_t i = 0; i < n; ++i) {
        const double cand = state.scores[i] + model.log_a(i, j);
        if (cand > best) {
          best = cand;
          back[j] = static_cast<ZoneId>(i);
        }
      }
      next[j] = best;
    }
    state.backpointers.push_back(std::move(back));
  }
  for (std::size_t z = 0; z < n; ++z) {
    for (std::size_t k = 0; k < obs.size(); ++k) next[z] += model.log_emitter(k, z, obs[k]);
  }
  state.scores = std::move(next);
  ++state.steps;

  std::size_t best = 0;
  for (std::size_t z = 1; z < n; ++z) {
    if (state.scores[z] > state.scores[best]) best = z;
  }
  return static_cast<ZoneId>(best);
}

std::vector<ZoneId> tracker_path(const TrackerState& state) {
  if (state.steps == 0) return {};
  std::vector<ZoneId> path(state.steps);
  std::size_t best = 0;
  for (std::size_t z = 1; z < state.scores.size(); ++z) {
    if (state.scores[z] > state.scores[best]) best = z;
  }
  path.back() = static_cast<ZoneId>(best);
  for (std::size_t t = state.steps - 1; t > 0; --t) {
    path[t - 1] = state.backpointers[t - 1][path[t]];
  }
  return path;
}

std::vector<ZoneId> viterbi(const HmmModel& model, std::span<const ObservationTuple> observations) {
  if (observations.empty()) throw Error("viterbi needs a non-empty observation sequence");
  auto state = tracker_init(model);
  for (const auto& obs : observations) tracker_step(state, model, obs);
  return tracker_path(state);
}

double path_log_probability(const HmmModel& model, std::span<const ObservationTuple> observations,
                            std::span<const ZoneId> path) {
  if (observations.size() != path.size() || path.empty()) throw Error("path/observation length mismatch");
  double s = model.log_pi(path[0]);
  for (std::size_t t = 0; t < path.size(); ++t) {
    if (t > 0) s += model.log_a(path[t - 1], path[t]);
    s += emission_log_likelihood(model, observations[t], path[t]);
  }
  return s;
}

void write_model_dump(std::ostream& out, const HmmModel& model) {
  auto row = [&](std::span<const double> r) {
    for (std::size_t i = 0; i < r.size(); ++i) out << (i ? " " : "") << format_double(r[i]);
    out << '\n';
  };
  auto matrix = [&](const Matrix& m) {
    for (std::size_t r = 0; r < m.rows(); ++r) row(m.row(r));
  };
  out << "[pi]\n";
  row(model.pi());
  out << "\n[transitions]\n";
  matrix(model.transitions().matrix());
  for (std::size_t k = 0; k < model.emitter_count(); ++k) {
    out << "\n[emitter " << k << "]\n";
    matrix(model.emitters()[k]);
  }
}

}  // namespace roomloc
