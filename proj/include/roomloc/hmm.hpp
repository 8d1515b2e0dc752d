#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "roomloc/matrix.hpp"
#include "roomloc/model.hpp"

namespace roomloc {

// Row-stochastic zone-to-zone movement probabilities.
class TransitionMatrix {
 public:
  // Throws Error naming the first row that is not a probability distribution.
  explicit TransitionMatrix(Matrix a);

  const Matrix& matrix() const { return a_; }
  std::size_t zone_count() const { return a_.rows(); }
  double operator()(std::size_t from, std::size_t to) const { return a_(from, to); }

 private:
  Matrix a_;
};

inline constexpr double kStochasticTolerance = 1e-9;

// Explicit matrix when the plan carries one, otherwise stay_prob on the
// diagonal and the remainder spread evenly over neighbours. Positive explicit
// entries without a matching edge are reported through `warnings`.
TransitionMatrix transitions_from_floor_plan(const FloorPlan& plan,
                                             std::vector<std::string>* warnings = nullptr);

// Uniform, or 0.9 on the start zone with the rest shared uniformly.
std::vector<double> initial_distribution(std::size_t zones, std::optional<ZoneId> start_zone);

// One zone prediction per base classifier, in emitter order.
using ObservationTuple = std::vector<ZoneId>;

// pi, A and one likelihood matrix per base classifier: emitter[k](z, o) is
// P(classifier k predicts o | true zone z). The joint emission of a tuple is
// the product over classifiers.
class HmmModel {
 public:
  HmmModel(std::vector<double> pi, TransitionMatrix a, std::vector<Matrix> emitters);

  std::size_t zone_count() const { return pi_.size(); }
  std::size_t emitter_count() const { return emitters_.size(); }
  const std::vector<double>& pi() const { return pi_; }
  const TransitionMatrix& transitions() const { return a_; }
  const std::vector<Matrix>& emitters() const { return emitters_; }

  double log_pi(std::size_t z) const { return log_pi_[z]; }
  double log_a(std::size_t from, std::size_t to) const { return log_a_(from, to); }
  double log_emitter(std::size_t k, std::size_t zone, std::size_t obs) const {
    return log_emitters_[k](zone, obs);
  }

 private:
  std::vector<double> pi_;
  TransitionMatrix a_;
  std::vector<Matrix> emitters_;
  std::vector<double> log_pi_;
  Matrix log_a_;
  std::vector<Matrix> log_emitters_;
};

// Sum over classifiers of log emitter[k](zone, obs[k]).
double emission_log_likelihood(const HmmModel& model, const ObservationTuple& obs, ZoneId zone);

// Most probable zone sequence. Ties go to the lower predecessor id per cell
// and to the lower final zone id.
std::vector<ZoneId> viterbi(const HmmModel& model, std::span<const ObservationTuple> observations);

// log pi[x0] + sum log a[x_{t-1}][x_t] + sum emission(x_t, y_t).
double path_log_probability(const HmmModel& model, std::span<const ObservationTuple> observations,
                            std::span<const ZoneId> path);

struct TrackerState {
  std::vector<double> scores;  // log-domain Viterbi scores for the latest step
  std::vector<std::vector<ZoneId>> backpointers;  // one row per step after the first
  std::size_t steps = 0;
};

TrackerState tracker_init(const HmmModel& model);
// Advances one Viterbi step and returns the terminal zone of the current best path.
ZoneId tracker_step(TrackerState& state, const HmmModel& model, const ObservationTuple& obs);
// Backtracks the full best path so far.
std::vector<ZoneId> tracker_path(const TrackerState& state);

// Sections "pi", "transitions" and "emitter <k>", rows on single lines.
void write_model_dump(std::ostream& out, const HmmModel& model);

}  // namespace roomloc
