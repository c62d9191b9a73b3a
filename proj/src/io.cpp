#include "accelpred/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "accelpred/common.hpp"

namespace acp {
namespace {

double parse_double(const std::string& s, const std::string& context) {
  double value = 0.0;
  const char* begin = s.data();
  const char* end = begin + s.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) {
    throw IoError(context + ": cannot parse number '" + s + "'");
  }
  return value;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path + " for reading");
  return in;
}

void expect_header(const std::string& got, const std::string& want,
                   const std::string& path) {
  if (got != want) {
    throw IoError(path + ": expected header '" + want + "', got '" + got + "'");
  }
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

std::string file_missing_hint(const std::string& path, const std::string& producer) {
  return path + " not found; run `accelpred " + producer + "` first";
}

std::vector<VehicleTrack> read_tracks_csv(const std::string& path) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw IoError(path + ": empty file");
  bool has_accel = false;
  if (line == "vehicle_id,t,x,v,a") {
    has_accel = true;
  } else if (line != "vehicle_id,t,x,v") {
    throw IoError(path + ": unexpected header '" + line + "'");
  }

  std::vector<VehicleTrack> tracks;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    const std::string ctx = path + ":" + std::to_string(row);
    if (fields.size() != (has_accel ? 5u : 4u)) {
      throw IoError(ctx + ": expected " + std::to_string(has_accel ? 5 : 4) + " fields");
    }
    if (tracks.empty() || tracks.back().vehicle_id != fields[0]) {
      tracks.emplace_back();
      tracks.back().vehicle_id = fields[0];
    }
    TrajectorySample s;
    s.t = parse_double(fields[1], ctx);
    s.x = parse_double(fields[2], ctx);
    s.v = parse_double(fields[3], ctx);
    if (has_accel && !fields[4].empty()) s.a = parse_double(fields[4], ctx);
    tracks.back().samples.push_back(s);
  }
  for (auto& t : tracks) {
    validate_track(t);
    t.entry_time = t.samples.front().t;
  }
  return tracks;
}

void write_tracks_csv(const std::string& path,
                      const std::vector<VehicleTrack>& tracks) {
  auto out = open_out(path);
  out << "vehicle_id,t,x,v,a\n";
  for (const auto& t : tracks) {
    for (const auto& s : t.samples) {
      if (!s.a.has_value()) {
        throw ValidationError("write_tracks_csv: track " + t.vehicle_id +
                              " has samples without acceleration");
      }
      out << t.vehicle_id << ',' << format_double(s.t) << ',' << format_double(s.x)
          << ',' << format_double(s.v) << ',' << format_double(*s.a) << '\n';
    }
  }
}

void write_labels_csv(const std::string& path,
                      const std::vector<VehicleTrack>& tracks) {
  auto out = open_out(path);
  out << "vehicle_id,archetype\n";
  for (const auto& t : tracks) out << t.vehicle_id << ',' << t.archetype << '\n';
}

std::map<std::string, std::string> read_labels_csv(const std::string& path) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw IoError(path + ": empty file");
  expect_header(line, "vehicle_id,archetype", path);
  std::map<std::string, std::string> labels;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 2) throw IoError(path + ": malformed row '" + line + "'");
    labels[fields[0]] = fields[1];
  }
  return labels;
}

std::vector<SpatialProfile> read_profiles_csv(const std::string& path) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw IoError(path + ": empty file");
  expect_header(line, "vehicle_id,entry_time,x,v,a", path);

  std::vector<SpatialProfile> profiles;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    const std::string ctx = path + ":" + std::to_string(row);
    if (fields.size() != 5) throw IoError(ctx + ": expected 5 fields");
    const double x = parse_double(fields[2], ctx);
    const long idx = static_cast<long>(x);
    if (static_cast<double>(idx) != x) {
      throw IoError(ctx + ": profile position must be an integer meter, got " + fields[2]);
    }
    if (profiles.empty() || profiles.back().vehicle_id != fields[0]) {
      profiles.emplace_back();
      profiles.back().vehicle_id = fields[0];
      profiles.back().entry_time = parse_double(fields[1], ctx);
      profiles.back().first_index = idx;
    } else if (idx != profiles.back().last_index() + 1) {
      throw IoError(ctx + ": profile grid positions must be consecutive");
    }
    profiles.back().v_at.push_back(parse_double(fields[3], ctx));
    profiles.back().a_at.push_back(parse_double(fields[4], ctx));
  }
  return profiles;
}

void write_profiles_csv(const std::string& path,
                        const std::vector<SpatialProfile>& profiles) {
  auto out = open_out(path);
  out << "vehicle_id,entry_time,x,v,a\n";
  for (const auto& p : profiles) {
    for (std::size_t i = 0; i < p.size(); ++i) {
      out << p.vehicle_id << ',' << format_double(p.entry_time) << ','
          << format_double(p.position(i)) << ',' << format_double(p.v_at[i]) << ','
          << format_double(p.a_at[i]) << '\n';
    }
  }
}

void write_env_csv(const std::string& path, const EnvSequence& env) {
  auto out = open_out(path);
  out << "position,v_p20,v_p40,v_p60,v_p80,a_p20,a_p40,a_p60,a_p80,support\n";
  for (std::size_t i = 0; i < env.size(); ++i) {
    if (!env.present[i]) continue;
    out << (env.first_index + static_cast<long>(i));
    for (double v : env.rows[i]) out << ',' << format_double(v);
    out << ',' << env.support[i] << '\n';
  }
}

void write_assignments_csv(const std::string& path,
                           const std::vector<DriverFeatures>& features,
                           const ClusteringResult& result) {
  if (features.size() != result.assignment.size()) {
    throw ValidationError("write_assignments_csv: feature/assignment size mismatch");
  }
  auto out = open_out(path);
  out << "vehicle_id,cluster,label\n";
  for (std::size_t i = 0; i < features.size(); ++i) {
    const int c = result.assignment[i];
    out << features[i].vehicle_id << ',' << c << ','
        << (result.labels.empty() ? "" : result.labels[static_cast<std::size_t>(c)])
        << '\n';
  }
}

std::map<std::string, int> read_assignments_csv(const std::string& path) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw IoError(path + ": empty file");
  expect_header(line, "vehicle_id,cluster,label", path);
  std::map<std::string, int> out;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 3) throw IoError(path + ":" + std::to_string(row) + ": bad row");
    out[fields[0]] = static_cast<int>(std::stol(fields[1]));
  }
  return out;
}

void write_k_diagnostics_csv(const std::string& path,
                             const std::vector<KDiagnostics>& diags) {
  auto out = open_out(path);
  out << "k,L,ln_Lprime,aic,bic\n";
  for (const auto& d : diags) {
    out << d.k << ',' << format_double(d.mean_min_distance) << ','
        << format_double(d.ln_l_prime) << ',' << format_double(d.aic) << ','
        << format_double(d.bic) << '\n';
  }
}

}  // namespace acp
