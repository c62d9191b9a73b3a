#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace acp {

// One radar-rate motion record. x is signed longitudinal position in meters:
// negative inside the tunnel, 0 at the exit portal, positive outside.
struct TrajectorySample {
  double t = 0.0;  // seconds
  double x = 0.0;  // meters
  double v = 0.0;  // m/s
  std::optional<double> a;  // m/s^2, absent until differentiation
};

struct VehicleTrack {
  std::string vehicle_id;
  double entry_time = 0.0;  // wall-clock seconds since recording start
  std::string archetype;    // generator ground truth; empty when unknown
  std::vector<TrajectorySample> samples;
};

// >= 2 samples, v >= 0, strictly increasing t and x.
void validate_track(const VehicleTrack& track);

// Central differences of v(t) at interior samples, one-sided at the ends.
VehicleTrack differentiate_speed(VehicleTrack track);

// A track resampled onto a uniform spatial grid. Grid point i sits at
// (first_index + i) * spacing meters; indices are consecutive.
struct SpatialProfile {
  std::string vehicle_id;
  double entry_time = 0.0;
  std::string archetype;
  double spacing = 1.0;
  long first_index = 0;
  std::vector<double> v_at;
  std::vector<double> a_at;

  std::size_t size() const { return v_at.size(); }
  long last_index() const { return first_index + static_cast<long>(size()) - 1; }
  double position(std::size_t i) const {
    return (first_index + static_cast<long>(i)) * spacing;
  }
  bool covers(long lo, long hi) const {
    return !v_at.empty() && first_index <= lo && hi <= last_index();
  }
  double v_index(long idx) const { return v_at[static_cast<std::size_t>(idx - first_index)]; }
  double a_index(long idx) const { return a_at[static_cast<std::size_t>(idx - first_index)]; }
};

// Linear interpolation of a and v onto grid multiples of `grid_spacing`
// inside the track's x-range; no extrapolation. Requires acceleration
// populated and strictly increasing x.
SpatialProfile resample_to_grid(const VehicleTrack& track,
                                double grid_spacing = 1.0);

struct WindowSegments {
  // (v, a) per grid step over (anchor - history_len, anchor], oldest first.
  std::vector<std::array<double, 2>> history;
  // a per grid step over (anchor, anchor + horizon].
  std::vector<double> target;
};

// Empty when the profile does not cover [anchor - history_len, anchor + horizon].
std::optional<WindowSegments> extract_window(const SpatialProfile& profile,
                                             long anchor, long history_len,
                                             long horizon);

// Differentiate + resample a whole population. OpenMP over tracks; the
// serial:: variant is the reference the parallel one is tested against.
std::vector<SpatialProfile> resample_population(
    const std::vector<VehicleTrack>& tracks, double grid_spacing = 1.0);

namespace serial {
std::vector<SpatialProfile> resample_population(
    const std::vector<VehicleTrack>& tracks, double grid_spacing = 1.0);
}

}  // namespace acp
