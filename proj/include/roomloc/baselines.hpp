#pragma once

#include <vector>

#include "roomloc/classifiers.hpp"
#include "roomloc/hmm.hpp"

namespace roomloc {

// Most frequent zone in the tuple. Among tied zones the one predicted by the
// earliest classifier wins.
ZoneId majority_vote(const ObservationTuple& predictions);

class VotingEnsemble {
 public:
  // Classifier order is the tie-break priority.
  explicit VotingEnsemble(std::vector<TrainedClassifier> classifiers);

  const std::vector<TrainedClassifier>& classifiers() const { return classifiers_; }
  ObservationTuple observe(const Fingerprint& f) const;
  ZoneId predict(const Fingerprint& f) const { return majority_vote(observe(f)); }

 private:
  std::vector<TrainedClassifier> classifiers_;
};

}  // namespace roomloc
