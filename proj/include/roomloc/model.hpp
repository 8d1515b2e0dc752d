#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "roomloc/matrix.hpp"

namespace roomloc {

using ZoneId = int;

// Reported for anchors that did not appear in a scan; weaker than any real reading.
inline constexpr double kUnheardRssi = -100.0;
inline constexpr double kMaxRssi = 0.0;
// Features per fingerprint contributed by the magnetometer: mean x, y, z and magnitude.
inline constexpr std::size_t kMfFeatures = 4;

struct Zone {
  ZoneId id = 0;
  std::string label;

  bool operator==(const Zone&) const = default;
};

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  bool operator==(const Vec3&) const = default;
};

struct Fingerprint {
  std::int64_t timestamp_ms = 0;
  std::vector<double> rssi;               // dBm, indexed by anchor id
  std::array<double, kMfFeatures> mf{};  // µT: x, y, z, magnitude
  std::optional<ZoneId> label;

  bool operator==(const Fingerprint&) const = default;
};

// Flat feature vector fed to the classifiers: rssi followed by the MF features.
std::vector<double> feature_vector(const Fingerprint& f);

struct FloorPlan {
  std::vector<Zone> zones;
  // Unordered adjacency pairs, stored with first < second.
  std::vector<std::pair<ZoneId, ZoneId>> edges;
  // Probability of remaining in a zone, one entry per zone.
  std::vector<double> stay_prob;
  std::optional<Matrix> explicit_transitions;
  std::optional<ZoneId> start_zone;

  std::size_t zone_count() const { return zones.size(); }
  std::vector<std::vector<ZoneId>> neighbors() const;

  bool operator==(const FloorPlan&) const = default;
};

// Zones labelled "zone_<i>", no edges, uniform stay probability.
FloorPlan make_floor_plan(std::size_t zone_count, double stay_prob = 0.6);
// Inserts an undirected edge (normalized, deduplicated).
void add_edge(FloorPlan& plan, ZoneId a, ZoneId b);

struct LabeledDataset {
  std::size_t anchor_count = 0;
  std::size_t zone_count = 0;
  std::vector<Fingerprint> samples;

  std::vector<std::size_t> class_counts() const;
};

// Each entry names the violated invariant and the zone/edge it concerns.
std::vector<std::string> validate_floor_plan(const FloorPlan& plan);
// Non-fatal findings, currently only graph connectivity.
std::vector<std::string> floor_plan_warnings(const FloorPlan& plan);

// Checks fingerprint invariants against an anchor count; returns violations.
std::vector<std::string> validate_fingerprint(const Fingerprint& f, std::size_t anchor_count,
                                              std::size_t zone_count = 0);

// One fingerprint per Wi-Fi scan. MF readings collected since the previous scan are averaged.
Fingerprint build_fingerprint(const std::map<int, double>& wifi_scan,
                              std::span<const Vec3> mf_window, std::int64_t timestamp_ms,
                              std::size_t anchor_count);

// --- Fingerprint CSV -------------------------------------------------------
// timestamp_ms,zone_id,rssi_0,...,rssi_{k-1},mf_x,mf_y,mf_z,mf_mag

void write_fingerprint_csv(std::ostream& out, const LabeledDataset& data);
void write_fingerprint_csv(const std::string& path, const LabeledDataset& data);
// zone_count is taken from the floor plan the data belongs to; 0 skips the label range check.
LabeledDataset read_fingerprint_csv(std::istream& in, std::size_t zone_count,
                                    const std::string& source = "<stream>");
LabeledDataset read_fingerprint_csv(const std::string& path, std::size_t zone_count);

// --- Floor plan config -----------------------------------------------------
//   zones <n>
//   label <i> <name>
//   stay <p>            default for all zones
//   stay <i> <p>        per-zone override
//   start <i>
//   edge <i> <j>
//   matrix              followed by n rows of n numbers, closed by "end"
// '#' starts a comment.

FloorPlan parse_floor_plan(std::istream& in, const std::string& source = "<stream>");
FloorPlan read_floor_plan(const std::string& path);
void write_floor_plan(std::ostream& out, const FloorPlan& plan);

// Shortest round-trip representation of a double.
std::string format_double(double v);

}  // namespace roomloc
