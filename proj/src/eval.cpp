#include "roomloc/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <ostream>

#include "roomloc/baselines.hpp"
#include "roomloc/error.hpp"

namespace roomloc {
namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point a, Clock::time_point b) {
  return std::chrono::duration<double, std::milli>(b - a).count();
}

double ratio(std::size_t num, std::size_t den, bool& degenerate) {
  if (den == 0) {
    degenerate = true;
    return 0.0;
  }
  return static_cast<double>(num) / static_cast<double>(den);
}

// Nearest-rank percentile over a sorted sample.
double percentile(const std::vector<double>& sorted, double q) {
  const auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(sorted.size())));
  return sorted[std::clamp<std::size_t>(rank, 1, sorted.size()) - 1];
}

}  // namespace

double accuracy(std::span<const ZoneId> predicted, std::span<const ZoneId> truth) {
  if (predicted.size() != truth.size()) throw Error("accuracy: length mismatch");
  if (predicted.empty()) throw Error("accuracy: empty sequences");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) hits += predicted[i] == truth[i];
  return static_cast<double>(hits) / static_cast<double>(predicted.size());
}

std::vector<ZoneMetrics> per_zone_metrics(const ConfusionMatrix& cm) {
  std::vector<ZoneMetrics> out(cm.zone_count());
  for (std::size_t z = 0; z < cm.zone_count(); ++z) {
    auto& m = out[z];
    const std::size_t tp = cm(z, z);
    m.precision = ratio(tp, cm.col_sum(z), m.degenerate);
    m.sensitivity = ratio(tp, cm.row_sum(z), m.degenerate);
    const double s = m.precision + m.sensitivity;
    if (s > 0.0) {
      m.f1 = 2.0 * m.sensitivity * m.precision / s;
    } else {
      m.f1 = 0.0;
      m.degenerate = true;
    }
  }
  return out;
}

LatencyStats summarize_latency(std::span<const double> timings_ms) {
  LatencyStats s;
  if (timings_ms.size() <= kLatencyWarmup) return s;
  std::vector<double> kept(timings_ms.begin() + kLatencyWarmup, timings_ms.end());
  s.samples = kept.size();
  s.mean_ms = std::accumulate(kept.begin(), kept.end(), 0.0) / static_cast<double>(kept.size());
  std::sort(kept.begin(), kept.end());
  s.p50_ms = percentile(kept, 0.50);
  s.p90_ms = percentile(kept, 0.90);
  s.p99_ms = percentile(kept, 0.99);
  s.max_ms = kept.back();
  return s;
}

LatencyStats measure_latency(const PredictFn& predictor, std::span<const Fingerprint> fingerprints) {
  if (fingerprints.size() < kLatencyMinSamples) {
    throw Error("latency measurement needs at least " + std::to_string(kLatencyMinSamples) +
                " fingerprints, got " + std::to_string(fingerprints.size()));
  }
  std::vector<double> timings;
  timings.reserve(fingerprints.size());
  for (const auto& f : fingerprints) {
    const auto t0 = Clock::now();
    volatile ZoneId z = predictor(f);
    (void)z;
    timings.push_back(elapsed_ms(t0, Clock::now()));
  }
  return summarize_latency(timings);
}

const PredictorReport& EvalReport::at(const std::string& name) const {
  for (const auto& p : predictors) {
    if (p.name == name) return p;
  }
  throw Error("no predictor named '" + name + "' in report");
}

EvalReport run_benchmark(const LabeledDataset& trajectory, const PredictorSet& predictors,
                         const std::string& trajectory_name) {
  const std::size_t m = predictors.individuals.size();
  const std::size_t n = predictors.hmm.zone_count();
  if (m == 0) throw Error("benchmark needs at least one individual predictor");
  if (predictors.hmm.emitter_count() != m) {
    throw Error("HMM has " + std::to_string(predictors.hmm.emitter_count()) + " emitters for " +
                std::to_string(m) + " predictors");
  }
  if (trajectory.samples.empty()) throw Error("trajectory '" + trajectory_name + "' is empty");
  if (trajectory.zone_count != 0 && trajectory.zone_count != n) {
    throw Error("trajectory zone count " + std::to_string(trajectory.zone_count) +
                " does not match the model's " + std::to_string(n));
  }
  if (predictors.training_time_range) {
    const auto [lo, hi] = *predictors.training_time_range;
    for (const auto& f : trajectory.samples) {
      if (f.timestamp_ms >= lo && f.timestamp_ms <= hi) {
        throw Error("trajectory '" + trajectory_name + "' overlaps the training data at t=" +
                    std::to_string(f.timestamp_ms));
      }
    }
  }

  EvalReport report;
  report.trajectory = trajectory_name;
  report.zone_count = n;
  for (const auto& f : trajectory.samples) {
    if (!f.label) throw Error("trajectory '" + trajectory_name + "' has unlabeled fingerprints");
    report.truth.push_back(*f.label);
  }

  const std::size_t total = m + 2;
  std::vector<std::vector<ZoneId>> preds(total);
  std::vector<std::vector<double>> times(total);
  auto tracker = tracker_init(predictors.hmm);
  ObservationTuple obs(m);
  std::vector<double> base_ms(m);
  for (const auto& f : trajectory.samples) {
    double shared = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      const auto t0 = Clock::now();
      obs[k] = predictors.individuals[k].predict(f);
      base_ms[k] = elapsed_ms(t0, Clock::now());
      shared += base_ms[k];
      preds[k].push_back(obs[k]);
      times[k].push_back(base_ms[k]);
    }
    auto t0 = Clock::now();
    preds[m].push_back(majority_vote(obs));
    times[m].push_back(shared + elapsed_ms(t0, Clock::now()));
    t0 = Clock::now();
    preds[m + 1].push_back(tracker_step(tracker, predictors.hmm, obs));
    times[m + 1].push_back(shared + elapsed_ms(t0, Clock::now()));
  }

  for (std::size_t p = 0; p < total; ++p) {
    PredictorReport r;
    r.name = p < m ? predictors.individuals[p].name : (p == m ? kVotingName : kHmmdName);
    r.predictions = std::move(preds[p]);
    r.accuracy = accuracy(r.predictions, report.truth);
    r.confusion = confusion_from(report.truth, r.predictions, n);
    r.zones = per_zone_metrics(r.confusion);
    if (times[p].size() >= kLatencyMinSamples) r.latency = summarize_latency(times[p]);
    report.predictors.push_back(std::move(r));
  }
  return report;
}

void write_report_tables(std::ostream& out, const EvalReport& report) {
  bool first = true;
  for (const auto& p : report.predictors) {
    if (!first) out << '\n';
    first = false;
    out << "predictor," << p.name << ",accuracy," << format_double(p.accuracy) << '\n';
    out << "zone,precision,sensitivity,f1,support,degenerate\n";
    for (std::size_t z = 0; z < p.zones.size(); ++z) {
      const auto& m = p.zones[z];
      out << z << ',' << format_double(m.precision) << ',' << format_double(m.sensitivity) << ','
          << format_double(m.f1) << ',' << p.confusion.row_sum(z) << ',' << (m.degenerate ? 1 : 0)
          << '\n';
    }
  }
}

void write_long_header(std::ostream& out) { out << "predictor,trajectory,zone,metric,value\n"; }

void write_long_rows(std::ostream& out, const EvalReport& report) {
  for (const auto& p : report.predictors) {
    out << p.name << ',' << report.trajectory << ",all,accuracy," << format_double(p.accuracy) << '\n';
    for (std::size_t z = 0; z < p.zones.size(); ++z) {
      const auto& m = p.zones[z];
      const std::string prefix = p.name + "," + report.trajectory + "," + std::to_string(z) + ",";
      out << prefix << "precision," << format_double(m.precision) << '\n';
      out << prefix << "sensitivity," << format_double(m.sensitivity) << '\n';
      out << prefix << "f1," << format_double(m.f1) << '\n';
    }
  }
}

void write_latency_header(std::ostream& out) { out << "predictor,trajectory,metric,value\n"; }

void write_latency_rows(std::ostream& out, const EvalReport& report) {
  for (const auto& p : report.predictors) {
    if (!p.latency) continue;
    const auto& l = *p.latency;
    const std::string prefix = p.name + "," + report.trajectory + ",";
    out << prefix << "samples," << l.samples << '\n';
    out << prefix << "mean_ms," << format_double(l.mean_ms) << '\n';
    out << prefix << "p50_ms," << format_double(l.p50_ms) << '\n';
    out << prefix << "p90_ms," << format_double(l.p90_ms) << '\n';
    out << prefix << "p99_ms," << format_double(l.p99_ms) << '\n';
    out << prefix << "max_ms," << format_double(l.max_ms) << '\n';
  }
}

}  // namespace roomloc
