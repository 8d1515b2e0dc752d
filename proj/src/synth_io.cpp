#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "roomloc/error.hpp"
#include "roomloc/synth.hpp"

namespace roomloc {
namespace {

bool to_double(const std::string& s, double& out) {
  const char* first = s.data();
  if (!s.empty() && *first == '+') ++first;
  auto res = std::from_chars(first, s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

}  // namespace

Environment parse_environment(std::istream& in, const std::string& source) {
  Environment env;
  std::map<std::size_t, Rect> zones;
  std::map<std::size_t, std::string> labels;
  std::map<std::size_t, double> walls;
  std::map<std::size_t, Vec3> offsets;
  double default_wall = 0.0;
  bool have_floor = false;

  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string where = source + ":" + std::to_string(line_no);
    std::istringstream ss(raw.substr(0, raw.find('#')));
    std::vector<std::string> tok;
    for (std::string t; ss >> t;) tok.push_back(t);
    if (tok.empty()) continue;
    const auto& key = tok[0];

    auto num = [&](std::size_t i) {
      double v = 0.0;
      if (i >= tok.size()) throw Error(where + ": '" + key + "' is missing argument " + std::to_string(i));
      if (!to_double(tok[i], v)) throw Error(where + ": bad number '" + tok[i] + "'");
      return v;
    };
    auto id = [&](std::size_t i) {
      const double v = num(i);
      if (v < 0 || v != static_cast<double>(static_cast<std::size_t>(v)) || v > 1e6) {
        throw Error(where + ": bad zone id '" + tok[i] + "'");
      }
      return static_cast<std::size_t>(v);
    };
    auto arity = [&](std::size_t lo, std::size_t hi) {
      if (tok.size() < lo + 1 || tok.size() > hi + 1) {
        throw Error(where + ": wrong number of arguments for '" + key + "'");
      }
    };

    if (key == "floor") {
      arity(2, 2);
      env.width = num(1);
      env.height = num(2);
      have_floor = true;
    } else if (key == "zone") {
      arity(5, 6);
      const auto z = id(1);
      if (zones.count(z)) throw Error(where + ": duplicate zone " + std::to_string(z));
      zones[z] = Rect{num(2), num(3), num(4), num(5)};
      labels[z] = tok.size() > 6 ? tok[6] : "zone_" + std::to_string(z);
    } else if (key == "anchor") {
      arity(2, 2);
      env.anchors.push_back({num(1), num(2)});
    } else if (key == "pathloss") {
      arity(3, 3);
      env.path_loss = {num(1), num(2), num(3)};
    } else if (key == "wall") {
      arity(1, 2);
      if (tok.size() == 2) {
        default_wall = num(1);
      } else {
        walls[id(1)] = num(2);
      }
    } else if (key == "mf_base") {
      arity(3, 3);
      env.mf_base = {num(1), num(2), num(3)};
    } else if (key == "mf_gradient") {
      arity(6, 6);
      for (std::size_t i = 0; i < 6; ++i) env.mf_gradient[i] = num(i + 1);
    } else if (key == "mf_offset") {
      arity(4, 4);
      offsets[id(1)] = {num(2), num(3), num(4)};
    } else if (key == "mf_noise") {
      arity(1, 1);
      env.mf_noise_sigma = num(1);
    } else {
      throw Error(where + ": unknown key '" + key + "'");
    }
  }
  if (!have_floor) throw Error(source + ": missing 'floor' line");
  const std::size_t n = zones.size();
  for (std::size_t z = 0; z < n; ++z) {
    if (!zones.count(z)) throw Error(source + ": zone ids must be dense, missing " + std::to_string(z));
    env.zones.push_back(zones[z]);
    env.zone_labels.push_back(labels[z]);
  }
  env.wall_attenuation_db.assign(n, default_wall);
  for (const auto& [z, db] : walls) {
    if (z >= n) throw Error(source + ": wall override for unknown zone " + std::to_string(z));
    env.wall_attenuation_db[z] = db;
  }
  env.mf_offsets.assign(n, Vec3{});
  for (const auto& [z, o] : offsets) {
    if (z >= n) throw Error(source + ": mf_offset for unknown zone " + std::to_string(z));
    env.mf_offsets[z] = o;
  }
  return env;
}

Environment read_environment(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path);
  return parse_environment(in, path);
}

void write_environment(std::ostream& out, const Environment& env) {
  auto d = [](double v) { return format_double(v); };
  out << "floor " << d(env.width) << ' ' << d(env.height) << '\n';
  for (std::size_t z = 0; z < env.zones.size(); ++z) {
    const auto& r = env.zones[z];
    out << "zone " << z << ' ' << d(r.x0) << ' ' << d(r.y0) << ' ' << d(r.x1) << ' ' << d(r.y1);
    if (z < env.zone_labels.size()) out << ' ' << env.zone_labels[z];
    out << '\n';
  }
  for (const auto& a : env.anchors) out << "anchor " << d(a.x) << ' ' << d(a.y) << '\n';
  out << "pathloss " << d(env.path_loss.p0_dbm) << ' ' << d(env.path_loss.exponent) << ' '
      << d(env.path_loss.shadowing_sigma_db) << '\n';
  for (std::size_t z = 0; z < env.wall_attenuation_db.size(); ++z) {
    out << "wall " << z << ' ' << d(env.wall_attenuation_db[z]) << '\n';
  }
  out << "mf_base " << d(env.mf_base.x) << ' ' << d(env.mf_base.y) << ' ' << d(env.mf_base.z) << '\n';
  out << "mf_gradient";
  for (double g : env.mf_gradient) out << ' ' << d(g);
  out << '\n';
  for (std::size_t z = 0; z < env.mf_offsets.size(); ++z) {
    const auto& o = env.mf_offsets[z];
    out << "mf_offset " << z << ' ' << d(o.x) << ' ' << d(o.y) << ' ' << d(o.z) << '\n';
  }
  out << "mf_noise " << d(env.mf_noise_sigma) << '\n';
}

}  // namespace roomloc
