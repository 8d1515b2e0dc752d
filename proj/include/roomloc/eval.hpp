#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "roomloc/classifiers.hpp"
#include "roomloc/hmm.hpp"

namespace roomloc {

double accuracy(std::span<const ZoneId> predicted, std::span<const ZoneId> truth);

struct ZoneMetrics {
  double precision = 0.0;
  double sensitivity = 0.0;
  double f1 = 0.0;
  // True when any of the three was 0/0 and reported as 0.
  bool degenerate = false;
};

std::vector<ZoneMetrics> per_zone_metrics(const ConfusionMatrix& cm);

struct LatencyStats {
  std::size_t samples = 0;  // timings kept after warm-up
  double mean_ms = 0.0;
  double p50_ms = 0.0;
  double p90_ms = 0.0;
  double p99_ms = 0.0;
  double max_ms = 0.0;
};

inline constexpr std::size_t kLatencyWarmup = 10;
inline constexpr std::size_t kLatencyMinSamples = 100;

// Drops the first kLatencyWarmup timings and summarizes the rest.
LatencyStats summarize_latency(std::span<const double> timings_ms);

using PredictFn = std::function<ZoneId(const Fingerprint&)>;

// Times predictor on each fingerprint in order. Needs at least kLatencyMinSamples inputs.
LatencyStats measure_latency(const PredictFn& predictor, std::span<const Fingerprint> fingerprints);

struct NamedPredictor {
  std::string name;
  PredictFn predict;
};

// The m individual predictors feed both the voting baseline and the HMM,
// whose emitters must follow the same order.
struct PredictorSet {
  std::vector<NamedPredictor> individuals;
  HmmModel hmm;
  // Closed timestamp range of the training data, checked against the trajectory.
  std::optional<std::pair<std::int64_t, std::int64_t>> training_time_range;
};

inline constexpr const char* kVotingName = "voting";
inline constexpr const char* kHmmdName = "hmm_d";

struct PredictorReport {
  std::string name;
  std::vector<ZoneId> predictions;
  double accuracy = 0.0;
  ConfusionMatrix confusion;
  std::vector<ZoneMetrics> zones;
  // Present when the trajectory is long enough for stable statistics.
  std::optional<LatencyStats> latency;
};

struct EvalReport {
  std::string trajectory;
  std::size_t zone_count = 0;
  std::vector<ZoneId> truth;
  // Individuals in order, then voting, then hmm_d.
  std::vector<PredictorReport> predictors;

  const PredictorReport& at(const std::string& name) const;
};

// Runs every predictor over one labelled trajectory. The base predictions are
// computed once per fingerprint and shared by voting and the HMM tracker.
EvalReport run_benchmark(const LabeledDataset& trajectory, const PredictorSet& predictors,
                         const std::string& trajectory_name = "trajectory");

// One block per predictor: a "predictor,<name>,accuracy,<value>" line, then a
// zone,precision,sensitivity,f1,support,degenerate table.
void write_report_tables(std::ostream& out, const EvalReport& report);
// Long format rows: predictor,trajectory,zone,metric,value ("all" for overall accuracy).
void write_long_header(std::ostream& out);
void write_long_rows(std::ostream& out, const EvalReport& report);
// Long format latency rows: predictor,trajectory,metric,value.
void write_latency_header(std::ostream& out);
void write_latency_rows(std::ostream& out, const EvalReport& report);

}  // namespace roomloc
