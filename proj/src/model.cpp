#include "roomloc/model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "roomloc/error.hpp"

namespace roomloc {

std::vector<double> feature_vector(const Fingerprint& f) {
  std::vector<double> out;
  out.reserve(f.rssi.size() + kMfFeatures);
  out.insert(out.end(), f.rssi.begin(), f.rssi.end());
  out.insert(out.end(), f.mf.begin(), f.mf.end());
  return out;
}

std::vector<std::vector<ZoneId>> FloorPlan::neighbors() const {
  std::vector<std::vector<ZoneId>> out(zones.size());
  for (const auto& [a, b] : edges) {
    if (a < 0 || b < 0 || static_cast<std::size_t>(a) >= zones.size() ||
        static_cast<std::size_t>(b) >= zones.size() || a == b) {
      continue;
    }
    out[a].push_back(b);
    out[b].push_back(a);
  }
  for (auto& n : out) {
    std::sort(n.begin(), n.end());
    n.erase(std::unique(n.begin(), n.end()), n.end());
  }
  return out;
}

FloorPlan make_floor_plan(std::size_t zone_count, double stay_prob) {
  FloorPlan plan;
  for (std::size_t i = 0; i < zone_count; ++i) {
    plan.zones.push_back({static_cast<ZoneId>(i), "zone_" + std::to_string(i)});
  }
  plan.stay_prob.assign(zone_count, stay_prob);
  return plan;
}

void add_edge(FloorPlan& plan, ZoneId a, ZoneId b) {
  const std::pair<ZoneId, ZoneId> e{std::min(a, b), std::max(a, b)};
  if (std::find(plan.edges.begin(), plan.edges.end(), e) == plan.edges.end()) {
    plan.edges.push_back(e);
  }
}

std::vector<std::size_t> LabeledDataset::class_counts() const {
  std::vector<std::size_t> counts(zone_count, 0);
  for (const auto& s : samples) {
    if (s.label && *s.label >= 0 && static_cast<std::size_t>(*s.label) < zone_count) {
      ++counts[*s.label];
    }
  }
  return counts;
}

std::vector<std::string> validate_floor_plan(const FloorPlan& plan) {
  std::vector<std::string> v;
  const auto n = plan.zones.size();
  if (n == 0) v.push_back("floor plan has no zones");
  for (std::size_t i = 0; i < n; ++i) {
    if (plan.zones[i].id != static_cast<ZoneId>(i)) {
      v.push_back("zone id not dense: position " + std::to_string(i) + " holds id " +
                  std::to_string(plan.zones[i].id));
    }
  }
  for (const auto& [a, b] : plan.edges) {
    const std::string ctx = " (" + std::to_string(a) + "," + std::to_string(b) + ")";
    if (a < 0 || b < 0 || static_cast<std::size_t>(a) >= n || static_cast<std::size_t>(b) >= n) {
      v.push_back("edge endpoint out of range" + ctx);
    } else if (a == b) {
      v.push_back("self-loop edge" + ctx);
    }
  }
  if (plan.stay_prob.size() != n) {
    v.push_back("stay_prob has " + std::to_string(plan.stay_prob.size()) + " entries for " +
                std::to_string(n) + " zones");
  }
  for (std::size_t i = 0; i < plan.stay_prob.size(); ++i) {
    const double p = plan.stay_prob[i];
    if (!(p > 0.0 && p <= 1.0)) {
      v.push_back("stay_prob out of range for zone " + std::to_string(i) + ": " + format_double(p));
    }
  }
  if (plan.start_zone && (*plan.start_zone < 0 || static_cast<std::size_t>(*plan.start_zone) >= n)) {
    v.push_back("start zone out of range: " + std::to_string(*plan.start_zone));
  }
  if (plan.explicit_transitions &&
      (plan.explicit_transitions->rows() != n || plan.explicit_transitions->cols() != n)) {
    v.push_back("explicit transition matrix is " + std::to_string(plan.explicit_transitions->rows()) +
                "x" + std::to_string(plan.explicit_transitions->cols()) + ", expected " +
                std::to_string(n) + "x" + std::to_string(n));
  }
  return v;
}

std::vector<std::string> floor_plan_warnings(const FloorPlan& plan) {
  std::vector<std::string> w;
  const auto n = plan.zones.size();
  if (n == 0) return w;
  const auto adj = plan.neighbors();
  std::vector<bool> seen(n, false);
  std::vector<ZoneId> stack{0};
  seen[0] = true;
  while (!stack.empty()) {
    const ZoneId z = stack.back();
    stack.pop_back();
    for (ZoneId m : adj[z]) {
      if (!seen[m]) {
        seen[m] = true;
        stack.push_back(m);
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!seen[i]) {
      w.push_back("floor plan graph is disconnected: zone " + std::to_string(i) +
                  " unreachable from zone 0");
    }
  }
  return w;
}

std::vector<std::string> validate_fingerprint(const Fingerprint& f, std::size_t anchor_count,
                                              std::size_t zone_count) {
  std::vector<std::string> v;
  const std::string ctx = " at t=" + std::to_string(f.timestamp_ms);
  if (f.rssi.size() != anchor_count) {
    v.push_back("rssi length " + std::to_string(f.rssi.size()) + " != anchor count " +
                std::to_string(anchor_count) + ctx);
  }
  for (std::size_t i = 0; i < f.rssi.size(); ++i) {
    if (!(f.rssi[i] >= kUnheardRssi && f.rssi[i] <= kMaxRssi)) {
      v.push_back("rssi_" + std::to_string(i) + " out of [-100, 0]" + ctx);
    }
  }
  const double mag = std::sqrt(f.mf[0] * f.mf[0] + f.mf[1] * f.mf[1] + f.mf[2] * f.mf[2]);
  if (std::abs(mag - f.mf[3]) > 1e-6 * std::max(1.0, mag)) {
    v.push_back("mf magnitude inconsistent with axes" + ctx);
  }
  if (zone_count > 0 && f.label &&
      (*f.label < 0 || static_cast<std::size_t>(*f.label) >= zone_count)) {
    v.push_back("label " + std::to_string(*f.label) + " out of range" + ctx);
  }
  return v;
}

Fingerprint build_fingerprint(const std::map<int, double>& wifi_scan,
                              std::span<const Vec3> mf_window, std::int64_t timestamp_ms,
                              std::size_t anchor_count) {
  if (mf_window.empty()) throw Error("no magnetometer data in window");
  Fingerprint f;
  f.timestamp_ms = timestamp_ms;
  f.rssi.assign(anchor_count, kUnheardRssi);
  for (const auto& [anchor, dbm] : wifi_scan) {
    if (anchor < 0 || static_cast<std::size_t>(anchor) >= anchor_count) {
      throw Error("scan references anchor " + std::to_string(anchor) + " outside 0.." +
                  std::to_string(anchor_count - 1));
    }
    f.rssi[anchor] = std::clamp(dbm, kUnheardRssi, kMaxRssi);
  }
  // Sorting the window makes the floating-point sum independent of reading order.
  std::vector<double> xs, ys, zs;
  for (const auto& r : mf_window) {
    xs.push_back(r.x);
    ys.push_back(r.y);
    zs.push_back(r.z);
  }
  auto mean = [](std::vector<double>& v) {
    std::sort(v.begin(), v.end());
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  };
  const double mx = mean(xs), my = mean(ys), mz = mean(zs);
  f.mf = {mx, my, mz, std::sqrt(mx * mx + my * my + mz * mz)};
  return f;
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace roomloc
