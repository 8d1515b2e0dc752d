#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

#include "roomloc/model.hpp"

namespace roomloc {

struct Point {
  double x = 0.0;
  double y = 0.0;

  bool operator==(const Point&) const = default;
};

// Axis-aligned rectangle, closed on all sides.
struct Rect {
  double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;

  bool contains(Point p) const { return p.x >= x0 && p.x <= x1 && p.y >= y0 && p.y <= y1; }
  Point center() const { return {(x0 + x1) / 2.0, (y0 + y1) / 2.0}; }
  bool operator==(const Rect&) const = default;
};

struct PathLossParams {
  double p0_dbm = -40.0;          // received power at 1 m
  double exponent = 3.0;          // gamma
  double shadowing_sigma_db = 4.0;

  bool operator==(const PathLossParams&) const = default;
};

struct Environment {
  double width = 0.0;   // metres along x
  double height = 0.0;  // metres along y
  std::vector<Rect> zones;  // index is the zone id
  std::vector<std::string> zone_labels;
  // Loss for a wall between zones a and b is the mean of the two entries.
  std::vector<double> wall_attenuation_db;
  std::vector<Point> anchors;
  PathLossParams path_loss;
  Vec3 mf_base;
  // µT per metre: {dBx/dx, dBx/dy, dBy/dx, dBy/dy, dBz/dx, dBz/dy}.
  std::array<double, 6> mf_gradient{};
  std::vector<Vec3> mf_offsets;  // per zone distortion
  double mf_noise_sigma = 0.0;
  FloorPlan plan;

  std::size_t zone_count() const { return zones.size(); }
  std::size_t anchor_count() const { return anchors.size(); }
  bool inside(Point p) const { return p.x >= 0.0 && p.x <= width && p.y >= 0.0 && p.y <= height; }
  // Lowest zone id whose rectangle contains p; throws outside the floor.
  ZoneId zone_at(Point p) const;
  // Total wall loss on the straight segment a-b.
  double wall_loss_db(Point a, Point b) const;
  // Midpoint of the wall two zones share; throws if they do not touch.
  Point door(ZoneId a, ZoneId b) const;

  bool operator==(const Environment&) const = default;
};

// Zone tiling, anchor placement and layout invariants; empty when usable.
std::vector<std::string> validate_environment(const Environment& env);

std::vector<double> rssi_at(const Environment& env, Point position, std::mt19937_64& rng);
Vec3 mf_at(const Environment& env, Point position, std::mt19937_64& rng);

struct TrajectorySpec {
  std::vector<ZoneId> waypoints;
  // Seconds spent at each waypoint's centre; empty means no pause anywhere.
  std::vector<double> dwell_s;
  double speed_mps = 1.0;
  double scan_hz = 2.0;
  double mf_hz = 14.0;
  std::int64_t start_ms = 0;
};

// Walks centre -> shared door -> centre between consecutive waypoints and
// emits one labelled fingerprint per Wi-Fi scan tick.
LabeledDataset generate_trajectory(const Environment& env, const TrajectorySpec& spec,
                                   std::uint64_t seed);

struct RandomWalkSpec {
  std::size_t min_per_zone = 250;
  double speed_mps = 1.0;
  double scan_hz = 2.0;
  double mf_hz = 14.0;
  double move_prob = 0.35;  // chance per leg of leaving the current zone
  std::int64_t start_ms = 0;
};

// Random walk over random points in each zone until every zone has at least
// min_per_zone fingerprints.
LabeledDataset generate_random_walk(const Environment& env, const RandomWalkSpec& spec,
                                    std::uint64_t seed);

// 18 m x 16 m floor with 8 zones: corridor 1 touching rooms 0, 2-6 and room 7
// reachable only through room 3; eight anchors on the boundary.
Environment canonical_environment();
FloorPlan canonical_floor_plan();
std::vector<TrajectorySpec> canonical_trajectories();

struct BenchmarkSuite {
  Environment env;
  LabeledDataset training;
  std::vector<LabeledDataset> trajectories;
};

BenchmarkSuite benchmark_suite(std::uint64_t seed);
BenchmarkSuite benchmark_suite(const Environment& env, std::uint64_t seed,
                               std::size_t min_per_zone = RandomWalkSpec{}.min_per_zone);

// --- Environment spec file ---------------------------------------------------
//   floor <width> <height>
//   zone <id> <x0> <y0> <x1> <y1> [label]
//   anchor <x> <y>
//   pathloss <p0_dbm> <exponent> <sigma_db>
//   wall <db>            default for every zone
//   wall <id> <db>       per-zone override
//   mf_base <x> <y> <z>
//   mf_gradient <6 values>
//   mf_offset <id> <x> <y> <z>
//   mf_noise <sigma>
// '#' starts a comment. The floor plan comes from its own file.

Environment parse_environment(std::istream& in, const std::string& source = "<stream>");
Environment read_environment(const std::string& path);
void write_environment(std::ostream& out, const Environment& env);

}  // namespace roomloc
