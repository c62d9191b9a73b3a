#include "accelpred/trajectory.hpp"

#include <cmath>
#include <cstddef>

#include "accelpred/common.hpp"
#include "accelpred/parallel.hpp"

namespace acp {

void validate_track(const VehicleTrack& track) {
  if (track.samples.size() < 2) {
    throw ValidationError("track " + track.vehicle_id + ": needs >= 2 samples, has " +
                          std::to_string(track.samples.size()));
  }
  for (std::size_t i = 0; i < track.samples.size(); ++i) {
    const auto& s = track.samples[i];
    if (s.v < 0.0) {
      throw ValidationError("track " + track.vehicle_id + ": negative speed at sample " +
                            std::to_string(i));
    }
    if (i > 0) {
      const auto& p = track.samples[i - 1];
      if (!(s.t > p.t)) {
        throw ValidationError("track " + track.vehicle_id +
                              ": time not strictly increasing at sample " + std::to_string(i));
      }
      if (!(s.x > p.x)) {
        throw ValidationError("track " + track.vehicle_id +
                              ": position not strictly increasing at sample " +
                              std::to_string(i));
      }
    }
  }
}

VehicleTrack differentiate_speed(VehicleTrack track) {
  validate_track(track);
  auto& s = track.samples;
  const std::size_t n = s.size();
  s.front().a = (s[1].v - s[0].v) / (s[1].t - s[0].t);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    s[i].a = (s[i + 1].v - s[i - 1].v) / (s[i + 1].t - s[i - 1].t);
  }
  s.back().a = (s[n - 1].v - s[n - 2].v) / (s[n - 1].t - s[n - 2].t);
  return track;
}

SpatialProfile resample_to_grid(const VehicleTrack& track, double grid_spacing) {
  validate_track(track);
  if (grid_spacing <= 0.0) {
    throw ValidationError("resample_to_grid: grid spacing must be positive");
  }
  for (std::size_t i = 0; i < track.samples.size(); ++i) {
    if (!track.samples[i].a.has_value()) {
      throw ValidationError("track " + track.vehicle_id +
                            ": acceleration absent at sample " + std::to_string(i) +
                            "; differentiate first");
    }
  }

  const auto& s = track.samples;
  SpatialProfile profile;
  profile.vehicle_id = track.vehicle_id;
  profile.entry_time = track.entry_time;
  profile.archetype = track.archetype;
  profile.spacing = grid_spacing;

  const long lo = static_cast<long>(std::ceil(s.front().x / grid_spacing - 1e-12));
  const long hi = static_cast<long>(std::floor(s.back().x / grid_spacing + 1e-12));
  profile.first_index = lo;
  if (hi < lo) return profile;  // track too short to hit any grid point

  profile.v_at.reserve(static_cast<std::size_t>(hi - lo + 1));
  profile.a_at.reserve(static_cast<std::size_t>(hi - lo + 1));

  std::size_t k = 1;  // right end of the bracketing pair
  for (long g = lo; g <= hi; ++g) {
    const double pos = g * grid_spacing;
    while (k + 1 < s.size() && s[k].x < pos) ++k;
    const double x0 = s[k - 1].x, x1 = s[k].x;
    const double dx = x1 - x0;
    if (dx == 0.0) {
      throw DegenerateGeometryError("track " + track.vehicle_id +
                                    ": duplicate x in bracketing pair at x=" +
                                    std::to_string(x1));
    }
    const double a0 = *s[k - 1].a, a1 = *s[k].a;
    profile.a_at.push_back(a1 + (a1 - a0) / dx * (pos - x1));
    profile.v_at.push_back(s[k].v + (s[k].v - s[k - 1].v) / dx * (pos - x1));
  }
  return profile;
}

std::optional<WindowSegments> extract_window(const SpatialProfile& profile,
                                             long anchor, long history_len,
                                             long horizon) {
  if (history_len <= 0 || horizon <= 0) {
    throw ValidationError("extract_window: history_len and horizon must be positive");
  }
  if (!profile.covers(anchor - history_len, anchor + horizon)) return std::nullopt;

  WindowSegments w;
  w.history.reserve(static_cast<std::size_t>(history_len));
  for (long p = anchor - history_len + 1; p <= anchor; ++p) {
    w.history.push_back({profile.v_index(p), profile.a_index(p)});
  }
  w.target.reserve(static_cast<std::size_t>(horizon));
  for (long p = anchor + 1; p <= anchor + horizon; ++p) {
    w.target.push_back(profile.a_index(p));
  }
  return w;
}

namespace serial {
std::vector<SpatialProfile> resample_population(
    const std::vector<VehicleTrack>& tracks, double grid_spacing) {
  std::vector<SpatialProfile> profiles(tracks.size());
  for (std::size_t i = 0; i < tracks.size(); ++i) {
    profiles[i] = resample_to_grid(differentiate_speed(tracks[i]), grid_spacing);
  }
  return profiles;
}
}  // namespace serial

std::vector<SpatialProfile> resample_population(
    const std::vector<VehicleTrack>& tracks, double grid_spacing) {
  std::vector<SpatialProfile> profiles(tracks.size());
  const long n = static_cast<long>(tracks.size());
  ExceptionCollector exc;
#pragma omp parallel for schedule(static)
  for (long i = 0; i < n; ++i) {
    exc.run([&, i] {
      profiles[static_cast<std::size_t>(i)] = resample_to_grid(
          differentiate_speed(tracks[static_cast<std::size_t>(i)]), grid_spacing);
    });
  }
  exc.rethrow();
  return profiles;
}

}  // namespace acp
