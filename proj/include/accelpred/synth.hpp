#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "accelpred/trajectory.hpp"

namespace acp {

// One driver-style population component. noise_scale (m/s^2) sets the
// per-driver stochastic deviation; 0 makes every driver of the archetype
// identical up to entry time.
struct ArchetypeSpec {
  std::string label;      // conservative | moderate | aggressive
  double mean_speed = 0;  // m/s, target mean over the section
  double mean_accel = 0;  // m/s^2, target mean over the section
  double accel_range = 0; // m/s^2, target max(a) - min(a)
  double mixture_weight = 0;
  double noise_scale = 0; // m/s^2
};

struct ScenarioSpec {
  double section_start = -380.0;  // m, tunnel interior is negative
  double section_end = 320.0;
  double speed_limit = 27.78;     // m/s (100 km/h), descriptive only
  double decel_onset = -180.0;    // m, where deceleration begins
  double accel_onset = -80.0;     // m, in-tunnel re-acceleration begins
  double exit_accel_position = 120.0;  // m, post-exit acceleration settles by here
  int n_vehicles = 0;
  double duration = 0.0;          // s, entry times drawn uniformly over this
  std::uint64_t seed = 0;
  double sample_interval = 0.05;  // s (20 Hz)
};

void validate_scenario(const ScenarioSpec& scenario,
                       const std::vector<ArchetypeSpec>& archetypes);

// The three styles with their published summary statistics.
std::vector<ArchetypeSpec> default_archetypes(double noise_scale = 0.035);

// Sampled tunnel-exit tracks: cruise, deceleration trough after decel_onset,
// partial in-tunnel recovery after accel_onset, renewed acceleration outside,
// all scaled per archetype with smooth per-driver noise. Tracks carry their
// generating archetype as ground truth and (t, x, v) samples at 20 Hz;
// acceleration is left to differentiate_speed.
std::vector<VehicleTrack> generate_population(
    const ScenarioSpec& scenario, const std::vector<ArchetypeSpec>& archetypes);

namespace serial {
std::vector<VehicleTrack> generate_population(
    const ScenarioSpec& scenario, const std::vector<ArchetypeSpec>& archetypes);
}

struct ArchetypeSummary {
  std::size_t count = 0;
  double accel_range_mean = 0;
  double avg_speed_mean = 0;
  double avg_accel_mean = 0;
};

// Empirical per-archetype means of the per-vehicle clustering features.
// Tracks must carry archetype labels; empty groups are simply absent.
std::map<std::string, ArchetypeSummary> summarize_population(
    const std::vector<VehicleTrack>& tracks);

// Analytic speed/acceleration profile of one driver; exposed for calibration
// tests. accel_at == d(v^2/2)/dx by construction.
struct DriverCurve {
  double bump_lo[3], bump_hi[3], bump_amp[3];  // decel (negative), in-tunnel, exit
  double base_accel = 0;
  double sine_amp[3], sine_wavelength[3], sine_phase[3];
  double v_start_sq = 0;
  double section_start = 0;

  double accel_at(double x) const;
  double accel_integral(double x) const;  // from section_start
  double speed_at(double x) const;
};

// The noiseless curve an archetype's drivers are jittered around, with
// v_start solved so that the mean speed over integer grid positions inside
// [section_start, section_end] equals the archetype target.
DriverCurve archetype_base_curve(const ScenarioSpec& scenario,
                                 const ArchetypeSpec& archetype);

}  // namespace acp
