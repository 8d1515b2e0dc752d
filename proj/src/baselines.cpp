#include "roomloc/baselines.hpp"

#include "roomloc/error.hpp"

namespace roomloc {

ZoneId majority_vote(const ObservationTuple& predictions) {
  if (predictions.empty()) throw Error("majority vote over an empty tuple");
  ZoneId best = predictions.front();
  std::size_t best_votes = 0;
  // Scanning in priority order with a strict comparison keeps the earliest tied zone.
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    std::size_t votes = 0;
    for (auto p : predictions) votes += (p == predictions[i]);
    if (votes > best_votes) {
      best_votes = votes;
      best = predictions[i];
    }
  }
  return best;
}

VotingEnsemble::VotingEnsemble(std::vector<TrainedClassifier> classifiers)
    : classifiers_(std::move(classifiers)) {
  if (classifiers_.empty()) throw Error("voting ensemble needs at least one classifier");
  for (const auto& c : classifiers_) {
    if (c.zone_count != classifiers_.front().zone_count) {
      throw Error("voting ensemble classifiers disagree on the zone set");
    }
  }
}

ObservationTuple VotingEnsemble::observe(const Fingerprint& f) const {
  ObservationTuple obs;
  obs.reserve(classifiers_.size());
  for (const auto& c : classifiers_) obs.push_back(roomloc::predict(c, f));
  return obs;
}

}  // namespace roomloc
