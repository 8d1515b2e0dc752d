#include "roomloc/synth.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "roomloc/error.hpp"

namespace roomloc {
namespace {

constexpr double kEps = 1e-9;

// Independent, reproducible sub-seeds for the generators of one suite.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Emits fingerprints along a piecewise-linear walk. Magnetometer readings
// arrive every 1/mf_hz seconds and are averaged into the next Wi-Fi tick.
class WalkSampler {
 public:
  WalkSampler(const Environment& env, double scan_hz, double mf_hz, std::int64_t start_ms,
              std::uint64_t seed, Point start)
      : env_(env), scan_hz_(scan_hz), mf_hz_(mf_hz), start_ms_(start_ms), rng_(seed), pos_(start) {
    if (!(scan_hz > 0.0) || !(mf_hz > 0.0)) throw Error("sampling rates must be positive");
    if (mf_hz < scan_hz) throw Error("magnetometer rate must be at least the Wi-Fi scan rate");
    if (!env.inside(start)) throw Error("walk starts outside the floor");
    data_.anchor_count = env.anchor_count();
    data_.zone_count = env.zone_count();
  }

  void move_to(Point target, double speed) {
    const double dist = std::hypot(target.x - pos_.x, target.y - pos_.y);
    advance(target, dist / speed);
  }

  void dwell(double seconds) { advance(pos_, seconds); }

  const LabeledDataset& data() const { return data_; }
  LabeledDataset take() { return std::move(data_); }

 private:
  void advance(Point target, double duration) {
    const Point from = pos_;
    const double t0 = time_, t1 = time_ + duration;
    auto at = [&](double t) {
      if (duration <= 0.0) return target;
      const double u = std::clamp((t - t0) / duration, 0.0, 1.0);
      return Point{from.x + u * (target.x - from.x), from.y + u * (target.y - from.y)};
    };
    for (;;) {
      const double mf_t = static_cast<double>(next_mf_) / mf_hz_;
      const double scan_t = static_cast<double>(next_scan_) / scan_hz_;
      if (std::min(mf_t, scan_t) > t1 + kEps) break;
      // A reading stamped at the same instant as a scan belongs to that scan.
      if (mf_t <= scan_t + kEps) {
        mf_window_.push_back(mf_at(env_, at(mf_t), rng_));
        ++next_mf_;
      } else {
        emit(at(scan_t), scan_t);
        ++next_scan_;
      }
    }
    time_ = t1;
    pos_ = target;
  }

  void emit(Point p, double t) {
    const auto rssi = rssi_at(env_, p, rng_);
    std::map<int, double> scan;
    for (std::size_t a = 0; a < rssi.size(); ++a) {
      if (rssi[a] > kUnheardRssi) scan[static_cast<int>(a)] = rssi[a];
    }
    auto f = build_fingerprint(scan, mf_window_, start_ms_ + std::llround(t * 1000.0),
                               env_.anchor_count());
    f.label = env_.zone_at(p);
    data_.samples.push_back(std::move(f));
    mf_window_.clear();
  }

  const Environment& env_;
  double scan_hz_, mf_hz_;
  std::int64_t start_ms_;
  std::mt19937_64 rng_;
  Point pos_;
  double time_ = 0.0;
  std::uint64_t next_mf_ = 1;
  std::uint64_t next_scan_ = 1;
  std::vector<Vec3> mf_window_;
  LabeledDataset data_;
};

bool adjacent(const FloorPlan& plan, ZoneId a, ZoneId b) {
  const std::pair<ZoneId, ZoneId> e{std::min(a, b), std::max(a, b)};
  return std::find(plan.edges.begin(), plan.edges.end(), e) != plan.edges.end();
}

Point random_point(const Rect& r, std::mt19937_64& rng) {
  // Keep clear of walls so legs between points stay strictly inside the zone.
  const double mx = std::min(0.3, (r.x1 - r.x0) / 4.0), my = std::min(0.3, (r.y1 - r.y0) / 4.0);
  std::uniform_real_distribution<double> ux(r.x0 + mx, r.x1 - mx), uy(r.y0 + my, r.y1 - my);
  const double x = ux(rng);
  return {x, uy(rng)};
}

}  // namespace

ZoneId Environment::zone_at(Point p) const {
  if (!inside(p)) {
    throw Error("position (" + format_double(p.x) + ", " + format_double(p.y) + ") is outside the floor");
  }
  for (std::size_t z = 0; z < zones.size(); ++z) {
    if (zones[z].contains(p)) return static_cast<ZoneId>(z);
  }
  throw Error("position (" + format_double(p.x) + ", " + format_double(p.y) + ") is in no zone");
}

double Environment::wall_loss_db(Point a, Point b) const {
  // Split the segment at every wall line it crosses and compare the zones of
  // consecutive pieces.
  std::vector<double> cuts{0.0, 1.0};
  auto add_cut = [&](double a0, double b0, double line) {
    if (std::abs(b0 - a0) < kEps) return;
    const double t = (line - a0) / (b0 - a0);
    if (t > kEps && t < 1.0 - kEps) cuts.push_back(t);
  };
  for (const auto& r : zones) {
    add_cut(a.x, b.x, r.x0);
    add_cut(a.x, b.x, r.x1);
    add_cut(a.y, b.y, r.y0);
    add_cut(a.y, b.y, r.y1);
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end(), [](double u, double v) { return v - u < kEps; }),
             cuts.end());
  double loss = 0.0;
  ZoneId prev = -1;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double t = (cuts[i] + cuts[i + 1]) / 2.0;
    const ZoneId z = zone_at({a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)});
    if (prev >= 0 && z != prev) loss += (wall_attenuation_db[prev] + wall_attenuation_db[z]) / 2.0;
    prev = z;
  }
  return loss;
}

Point Environment::door(ZoneId a, ZoneId b) const {
  const Rect& ra = zones.at(a);
  const Rect& rb = zones.at(b);
  auto overlap = [](double lo0, double hi0, double lo1, double hi1) {
    return std::pair{std::max(lo0, lo1), std::min(hi0, hi1)};
  };
  if (std::abs(ra.x1 - rb.x0) < kEps || std::abs(ra.x0 - rb.x1) < kEps) {
    const double x = std::abs(ra.x1 - rb.x0) < kEps ? ra.x1 : ra.x0;
    const auto [lo, hi] = overlap(ra.y0, ra.y1, rb.y0, rb.y1);
    if (hi - lo > kEps) return {x, (lo + hi) / 2.0};
  }
  if (std::abs(ra.y1 - rb.y0) < kEps || std::abs(ra.y0 - rb.y1) < kEps) {
    const double y = std::abs(ra.y1 - rb.y0) < kEps ? ra.y1 : ra.y0;
    const auto [lo, hi] = overlap(ra.x0, ra.x1, rb.x0, rb.x1);
    if (hi - lo > kEps) return {(lo + hi) / 2.0, y};
  }
  throw Error("zones " + std::to_string(a) + " and " + std::to_string(b) + " share no wall");
}

std::vector<std::string> validate_environment(const Environment& env) {
  std::vector<std::string> v;
  const auto n = env.zones.size();
  if (!(env.width > 0.0 && env.height > 0.0)) v.push_back("floor dimensions must be positive");
  if (n == 0) v.push_back("environment has no zones");
  double area = 0.0;
  for (std::size_t z = 0; z < n; ++z) {
    const auto& r = env.zones[z];
    if (!(r.x1 > r.x0 && r.y1 > r.y0)) v.push_back("zone " + std::to_string(z) + " has empty extent");
    if (r.x0 < -kEps || r.y0 < -kEps || r.x1 > env.width + kEps || r.y1 > env.height + kEps) {
      v.push_back("zone " + std::to_string(z) + " extends past the floor");
    }
    area += (r.x1 - r.x0) * (r.y1 - r.y0);
    for (std::size_t o = 0; o < z; ++o) {
      const auto& q = env.zones[o];
      const double ox = std::min(r.x1, q.x1) - std::max(r.x0, q.x0);
      const double oy = std::min(r.y1, q.y1) - std::max(r.y0, q.y0);
      if (ox > kEps && oy > kEps) {
        v.push_back("zones " + std::to_string(o) + " and " + std::to_string(z) + " overlap");
      }
    }
  }
  if (std::abs(area - env.width * env.height) > 1e-6 * std::max(1.0, env.width * env.height)) {
    v.push_back("zones do not tile the floor (covered area " + format_double(area) + ")");
  }
  if (env.anchors.empty()) v.push_back("environment has no anchors");
  for (std::size_t a = 0; a < env.anchors.size(); ++a) {
    if (!env.inside(env.anchors[a])) v.push_back("anchor " + std::to_string(a) + " is outside the floor");
  }
  if (env.wall_attenuation_db.size() != n) v.push_back("wall attenuation needs one entry per zone");
  if (env.mf_offsets.size() != n) v.push_back("mf offsets need one entry per zone");
  if (env.zone_labels.size() != n) v.push_back("zone labels need one entry per zone");
  if (env.path_loss.shadowing_sigma_db < 0.0 || env.mf_noise_sigma < 0.0) {
    v.push_back("noise sigmas must be non-negative");
  }
  if (env.plan.zone_count() != n) {
    v.push_back("floor plan has " + std::to_string(env.plan.zone_count()) + " zones, environment has " +
                std::to_string(n));
  } else {
    for (const auto& [a, b] : env.plan.edges) {
      try {
        env.door(a, b);
      } catch (const Error& e) {
        v.push_back(std::string("plan edge without a shared wall: ") + e.what());
      }
    }
  }
  return v;
}

std::vector<double> rssi_at(const Environment& env, Point position, std::mt19937_64& rng) {
  if (!env.inside(position)) {
    throw Error("position (" + format_double(position.x) + ", " + format_double(position.y) +
                ") is outside the floor");
  }
  const auto& pl = env.path_loss;
  std::normal_distribution<double> shadow(0.0, 1.0);
  std::vector<double> out(env.anchors.size());
  for (std::size_t a = 0; a < env.anchors.size(); ++a) {
    const auto& an = env.anchors[a];
    const double d = std::max(std::hypot(an.x - position.x, an.y - position.y), 1.0);
    double v = pl.p0_dbm - 10.0 * pl.exponent * std::log10(d) - env.wall_loss_db(an, position);
    if (pl.shadowing_sigma_db > 0.0) v += pl.shadowing_sigma_db * shadow(rng);
    out[a] = std::clamp(v, kUnheardRssi, kMaxRssi);
  }
  return out;
}

Vec3 mf_at(const Environment& env, Point position, std::mt19937_64& rng) {
  const ZoneId z = env.zone_at(position);
  const auto& g = env.mf_gradient;
  const auto& off = env.mf_offsets[z];
  Vec3 v{env.mf_base.x + off.x + g[0] * position.x + g[1] * position.y,
         env.mf_base.y + off.y + g[2] * position.x + g[3] * position.y,
         env.mf_base.z + off.z + g[4] * position.x + g[5] * position.y};
  if (env.mf_noise_sigma > 0.0) {
    std::normal_distribution<double> noise(0.0, env.mf_noise_sigma);
    v.x += noise(rng);
    v.y += noise(rng);
    v.z += noise(rng);
  }
  return v;
}

LabeledDataset generate_trajectory(const Environment& env, const TrajectorySpec& spec,
                                   std::uint64_t seed) {
  if (spec.waypoints.empty()) throw Error("trajectory has no waypoints");
  if (!(spec.speed_mps > 0.0)) throw Error("trajectory speed must be positive");
  if (!spec.dwell_s.empty() && spec.dwell_s.size() != spec.waypoints.size()) {
    throw Error("dwell times must match the waypoint count");
  }
  for (auto w : spec.waypoints) {
    if (w < 0 || static_cast<std::size_t>(w) >= env.zone_count()) {
      throw Error("waypoint zone " + std::to_string(w) + " out of range");
    }
  }
  for (std::size_t i = 1; i < spec.waypoints.size(); ++i) {
    const ZoneId a = spec.waypoints[i - 1], b = spec.waypoints[i];
    if (a != b && !adjacent(env.plan, a, b)) {
      throw Error("waypoints " + std::to_string(a) + " -> " + std::to_string(b) + " are not adjacent");
    }
  }
  WalkSampler walk(env, spec.scan_hz, spec.mf_hz, spec.start_ms, seed,
                   env.zones[spec.waypoints.front()].center());
  auto dwell = [&](std::size_t i) { return spec.dwell_s.empty() ? 0.0 : spec.dwell_s[i]; };
  walk.dwell(dwell(0));
  for (std::size_t i = 1; i < spec.waypoints.size(); ++i) {
    const ZoneId a = spec.waypoints[i - 1], b = spec.waypoints[i];
    if (a != b) walk.move_to(env.door(a, b), spec.speed_mps);
    walk.move_to(env.zones[b].center(), spec.speed_mps);
    walk.dwell(dwell(i));
  }
  return walk.take();
}

LabeledDataset generate_random_walk(const Environment& env, const RandomWalkSpec& spec,
                                    std::uint64_t seed) {
  if (!(spec.speed_mps > 0.0)) throw Error("walk speed must be positive");
  std::mt19937_64 rng(derive_seed(seed, 0));
  const auto adj = env.plan.neighbors();
  ZoneId zone = static_cast<ZoneId>(rng() % env.zone_count());
  WalkSampler walk(env, spec.scan_hz, spec.mf_hz, spec.start_ms, derive_seed(seed, 1),
                   random_point(env.zones[zone], rng));
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const std::size_t max_legs = 200000;
  for (std::size_t leg = 0; leg < max_legs; ++leg) {
    const auto counts = walk.data().class_counts();
    if (*std::min_element(counts.begin(), counts.end()) >= spec.min_per_zone) return walk.take();
    if (!adj[zone].empty() && unit(rng) < spec.move_prob) {
      const ZoneId next = adj[zone][rng() % adj[zone].size()];
      walk.move_to(env.door(zone, next), spec.speed_mps);
      zone = next;
    }
    walk.move_to(random_point(env.zones[zone], rng), spec.speed_mps);
  }
  throw Error("random walk did not cover every zone; is the floor plan connected?");
}

Environment canonical_environment() {
  Environment env;
  env.width = 18.0;
  env.height = 16.0;
  // Corridor band across the middle, three rooms above, three below; room 7
  // sits under room 3 and opens only into it.
  env.zones = {
      {0.0, 9.5, 6.0, 16.0},    // 0 room, north-west
      {0.0, 7.0, 18.0, 9.5},    // 1 corridor
      {6.0, 9.5, 12.0, 16.0},   // 2 room, north
      {0.0, 3.5, 6.0, 7.0},     // 3 room, west
      {12.0, 9.5, 18.0, 16.0},  // 4 room, north-east
      {6.0, 0.0, 12.0, 7.0},    // 5 room, south
      {12.0, 0.0, 18.0, 7.0},   // 6 room, south-east
      {0.0, 0.0, 6.0, 3.5},     // 7 inner room behind 3
  };
  env.zone_labels = {"room_nw", "corridor", "room_n", "room_w", "room_ne", "room_s", "room_se", "room_inner"};
  env.wall_attenuation_db.assign(env.zones.size(), 2.0);
  // Corners plus edge midpoints.
  env.anchors = {{0.0, 0.0}, {9.0, 0.0}, {18.0, 0.0}, {18.0, 8.0},
                 {18.0, 16.0}, {9.0, 16.0}, {0.0, 16.0}, {0.0, 8.0}};
  env.path_loss = {-40.0, 3.0, 7.0};
  env.mf_base = {22.0, 5.0, -42.0};
  env.mf_gradient = {0.15, -0.05, 0.05, 0.1, -0.1, 0.05};
  env.mf_offsets = {{3.0, -2.0, 1.0}, {0.0, 0.0, 0.0}, {-2.0, 2.5, -1.5}, {2.0, 1.5, 2.5},
                    {-3.0, -1.0, 2.0}, {1.5, -3.0, -2.0}, {-1.0, 2.0, 3.0}, {3.5, 3.0, -2.5}};
  env.mf_noise_sigma = 3.0;
  env.plan = canonical_floor_plan();
  return env;
}

FloorPlan canonical_floor_plan() {
  FloorPlan plan = make_floor_plan(8, 0.6);
  const char* labels[] = {"room_nw", "corridor", "room_n", "room_w", "room_ne", "room_s", "room_se", "room_inner"};
  for (std::size_t i = 0; i < 8; ++i) plan.zones[i].label = labels[i];
  for (ZoneId room : {0, 2, 3, 4, 5, 6}) add_edge(plan, 1, room);
  add_edge(plan, 3, 7);
  plan.stay_prob[1] = 0.4;
  plan.explicit_transitions = Matrix::from_rows({
      {0.6, 0.4, 0, 0, 0, 0, 0, 0},
      {0.1, 0.4, 0.1, 0.1, 0.1, 0.1, 0.1, 0},
      {0, 0.4, 0.6, 0, 0, 0, 0, 0},
      {0, 0.2, 0, 0.6, 0, 0, 0, 0.2},
      {0, 0.4, 0, 0, 0.6, 0, 0, 0},
      {0, 0.4, 0, 0, 0, 0.6, 0, 0},
      {0, 0.4, 0, 0, 0, 0, 0.6, 0},
      {0, 0, 0, 0.4, 0, 0, 0, 0.6},
  });
  return plan;
}

std::vector<TrajectorySpec> canonical_trajectories() {
  auto spec = [](std::vector<ZoneId> w, std::int64_t start_ms) {
    TrajectorySpec s;
    s.dwell_s.reserve(w.size());
    for (auto z : w) s.dwell_s.push_back(z == 1 ? 1.0 : 4.0);
    s.waypoints = std::move(w);
    s.start_ms = start_ms;
    return s;
  };
  // Training walks start at 0 ms; evaluation sessions are placed far after it.
  return {
      spec({0, 1, 2, 1, 4, 1, 6, 1, 5, 1, 3, 7}, 100'000'000'000),
      spec({7, 3, 1, 5, 1, 6, 1, 4, 1, 2, 1, 0}, 200'000'000'000),
      spec({2, 1, 3, 7, 3, 1, 0, 1, 5, 1, 4, 1, 6}, 300'000'000'000),
  };
}

BenchmarkSuite benchmark_suite(std::uint64_t seed) { return benchmark_suite(canonical_environment(), seed); }

BenchmarkSuite benchmark_suite(const Environment& env, std::uint64_t seed, std::size_t min_per_zone) {
  const auto violations = validate_environment(env);
  if (!violations.empty()) throw Error("invalid environment: " + violations.front());
  BenchmarkSuite suite;
  suite.env = env;
  RandomWalkSpec walk;
  walk.min_per_zone = min_per_zone;
  suite.training = generate_random_walk(env, walk, derive_seed(seed, 10));
  const auto specs = canonical_trajectories();
  for (std::size_t i = 0; i < specs.size(); ++i) {
    suite.trajectories.push_back(generate_trajectory(env, specs[i], derive_seed(seed, 20 + i)));
  }
  return suite;
}

}  // namespace roomloc
