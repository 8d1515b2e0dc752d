#include <charconv>
#include <fstream>
#include <sstream>

#include "roomloc/error.hpp"
#include "roomloc/model.hpp"

namespace roomloc {
namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, sep)) out.push_back(cell);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
bool parse_number(const std::string& text, T& out) {
  const auto s = trim(text);
  if (s.empty()) return false;
  const char* first = s.data();
  if (*first == '+') ++first;
  auto res = std::from_chars(first, s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

std::vector<std::string> expected_header(std::size_t anchors) {
  std::vector<std::string> h{"timestamp_ms", "zone_id"};
  for (std::size_t i = 0; i < anchors; ++i) h.push_back("rssi_" + std::to_string(i));
  for (const char* c : {"mf_x", "mf_y", "mf_z", "mf_mag"}) h.emplace_back(c);
  return h;
}

}  // namespace

void write_fingerprint_csv(std::ostream& out, const LabeledDataset& data) {
  const auto header = expected_header(data.anchor_count);
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << '\n';
  for (const auto& f : data.samples) {
    out << f.timestamp_ms << ',';
    if (f.label) out << *f.label;
    for (std::size_t a = 0; a < data.anchor_count; ++a) {
      out << ',' << format_double(a < f.rssi.size() ? f.rssi[a] : kUnheardRssi);
    }
    for (double v : f.mf) out << ',' << format_double(v);
    out << '\n';
  }
}

void write_fingerprint_csv(const std::string& path, const LabeledDataset& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  write_fingerprint_csv(out, data);
  if (!out) throw Error("write failed: " + path);
}

LabeledDataset read_fingerprint_csv(std::istream& in, std::size_t zone_count,
                                    const std::string& source) {
  std::string line;
  if (!std::getline(in, line)) throw Error(source + ": missing header row");
  auto header = split(trim(line), ',');
  for (auto& h : header) h = trim(h);
  if (header.size() < 2 + kMfFeatures) {
    throw Error(source + ": header has " + std::to_string(header.size()) + " columns, need at least " +
                std::to_string(2 + kMfFeatures));
  }
  const std::size_t anchors = header.size() - 2 - kMfFeatures;
  const auto expected = expected_header(anchors);
  for (std::size_t i = 0; i < expected.size(); ++i) {
    if (header[i] != expected[i]) {
      throw Error(source + ": column " + std::to_string(i + 1) + " is '" + header[i] +
                  "', expected '" + expected[i] + "'");
    }
  }

  LabeledDataset data;
  data.anchor_count = anchors;
  data.zone_count = zone_count;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split(trim(line), ',');
    const std::string where = source + ":" + std::to_string(line_no);
    if (cells.size() != expected.size()) {
      throw Error(where + ": expected " + std::to_string(expected.size()) + " fields, got " +
                  std::to_string(cells.size()));
    }
    Fingerprint f;
    if (!parse_number(cells[0], f.timestamp_ms)) throw Error(where + ": bad timestamp_ms");
    if (!trim(cells[1]).empty()) {
      ZoneId z = 0;
      if (!parse_number(cells[1], z)) throw Error(where + ": bad zone_id");
      if (z < 0 || (zone_count > 0 && static_cast<std::size_t>(z) >= zone_count)) {
        throw Error(where + ": zone_id " + std::to_string(z) + " out of range");
      }
      f.label = z;
    }
    f.rssi.resize(anchors);
    for (std::size_t a = 0; a < anchors; ++a) {
      const auto& cell = cells[2 + a];
      if (trim(cell).empty()) {
        f.rssi[a] = kUnheardRssi;
      } else if (!parse_number(cell, f.rssi[a])) {
        throw Error(where + ": bad value in column " + expected[2 + a]);
      }
    }
    for (std::size_t k = 0; k < kMfFeatures; ++k) {
      if (!parse_number(cells[2 + anchors + k], f.mf[k])) {
        throw Error(where + ": bad value in column " + expected[2 + anchors + k]);
      }
    }
    data.samples.push_back(std::move(f));
  }
  return data;
}

LabeledDataset read_fingerprint_csv(const std::string& path, std::size_t zone_count) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path);
  return read_fingerprint_csv(in, zone_count, path);
}

FloorPlan parse_floor_plan(std::istream& in, const std::string& source) {
  FloorPlan plan;
  std::optional<std::size_t> zones;
  std::optional<double> default_stay;
  std::vector<std::pair<std::size_t, double>> stay_overrides;
  std::vector<std::pair<std::size_t, std::string>> labels;
  std::vector<std::vector<double>> matrix_rows;
  bool in_matrix = false;
  bool has_matrix = false;

  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string where = source + ":" + std::to_string(line_no);
    auto line = trim(raw.substr(0, raw.find('#')));
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::vector<std::string> tok;
    for (std::string t; ss >> t;) tok.push_back(t);

    if (in_matrix) {
      if (tok.size() == 1 && tok[0] == "end") {
        in_matrix = false;
        continue;
      }
      std::vector<double> row;
      for (const auto& t : tok) {
        double v = 0.0;
        if (!parse_number(t, v)) throw Error(where + ": bad matrix entry '" + t + "'");
        row.push_back(v);
      }
      matrix_rows.push_back(std::move(row));
      continue;
    }

    const auto& key = tok[0];
    auto need = [&](std::size_t n) {
      if (tok.size() != n) {
        throw Error(where + ": '" + key + "' takes " + std::to_string(n - 1) + " argument(s)");
      }
    };
    auto index = [&](const std::string& t) {
      long long v = 0;
      if (!parse_number(t, v) || v < 0) throw Error(where + ": bad zone index '" + t + "'");
      return static_cast<std::size_t>(v);
    };
    auto number = [&](const std::string& t) {
      double v = 0.0;
      if (!parse_number(t, v)) throw Error(where + ": bad number '" + t + "'");
      return v;
    };

    if (key == "zones") {
      need(2);
      zones = index(tok[1]);
    } else if (key == "label") {
      if (tok.size() < 3) throw Error(where + ": 'label' takes an index and a name");
      std::string name = tok[2];
      for (std::size_t i = 3; i < tok.size(); ++i) name += " " + tok[i];
      labels.emplace_back(index(tok[1]), name);
    } else if (key == "stay") {
      if (tok.size() == 2) {
        default_stay = number(tok[1]);
      } else {
        need(3);
        stay_overrides.emplace_back(index(tok[1]), number(tok[2]));
      }
    } else if (key == "start") {
      need(2);
      plan.start_zone = static_cast<ZoneId>(index(tok[1]));
    } else if (key == "edge") {
      need(3);
      plan.edges.emplace_back(static_cast<ZoneId>(index(tok[1])), static_cast<ZoneId>(index(tok[2])));
      auto& e = plan.edges.back();
      if (e.first > e.second) std::swap(e.first, e.second);
    } else if (key == "matrix") {
      need(1);
      if (has_matrix) throw Error(where + ": duplicate matrix section");
      in_matrix = has_matrix = true;
    } else {
      throw Error(where + ": unknown key '" + key + "'");
    }
  }
  if (in_matrix) throw Error(source + ": matrix section not closed with 'end'");
  if (!zones) throw Error(source + ": missing 'zones' line");

  plan = [&] {
    FloorPlan p = make_floor_plan(*zones, default_stay.value_or(0.6));
    p.edges = std::move(plan.edges);
    p.start_zone = plan.start_zone;
    return p;
  }();
  for (const auto& [i, name] : labels) {
    if (i >= *zones) throw Error(source + ": label index " + std::to_string(i) + " out of range");
    plan.zones[i].label = name;
  }
  for (const auto& [i, p] : stay_overrides) {
    if (i >= *zones) throw Error(source + ": stay index " + std::to_string(i) + " out of range");
    plan.stay_prob[i] = p;
  }
  if (has_matrix) {
    for (std::size_t r = 0; r < matrix_rows.size(); ++r) {
      if (matrix_rows[r].size() != *zones) {
        throw Error(source + ": matrix row " + std::to_string(r) + " has " +
                    std::to_string(matrix_rows[r].size()) + " entries, expected " +
                    std::to_string(*zones));
      }
    }
    if (matrix_rows.size() != *zones) {
      throw Error(source + ": matrix has " + std::to_string(matrix_rows.size()) + " rows, expected " +
                  std::to_string(*zones));
    }
    plan.explicit_transitions = Matrix::from_rows(matrix_rows);
  }
  const auto violations = validate_floor_plan(plan);
  if (!violations.empty()) throw Error(source + ": " + violations.front());
  return plan;
}

FloorPlan read_floor_plan(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path);
  return parse_floor_plan(in, path);
}

void write_floor_plan(std::ostream& out, const FloorPlan& plan) {
  out << "zones " << plan.zones.size() << '\n';
  for (const auto& z : plan.zones) out << "label " << z.id << ' ' << z.label << '\n';
  for (std::size_t i = 0; i < plan.stay_prob.size(); ++i) {
    out << "stay " << i << ' ' << format_double(plan.stay_prob[i]) << '\n';
  }
  if (plan.start_zone) out << "start " << *plan.start_zone << '\n';
  for (const auto& [a, b] : plan.edges) out << "edge " << a << ' ' << b << '\n';
  if (plan.explicit_transitions) {
    out << "matrix\n";
    const auto& m = *plan.explicit_transitions;
    for (std::size_t r = 0; r < m.rows(); ++r) {
      for (std::size_t c = 0; c < m.cols(); ++c) out << (c ? " " : "") << format_double(m(r, c));
      out << '\n';
    }
    out << "end\n";
  }
}

}  // namespace roomloc
