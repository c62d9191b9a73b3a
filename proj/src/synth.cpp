#include "accelpred/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "accelpred/clustering.hpp"
#include "accelpred/common.hpp"
#include "accelpred/parallel.hpp"
#include "accelpred/rng.hpp"

namespace acp {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Bump phase widths (m). The deceleration trough spans decel_onset..+70,
// the in-tunnel recovery accel_onset..+50, and the exit phase ends 10 m
// past exit_accel_position after an 80 m ramp.
constexpr double kDecelWidth = 70.0;
constexpr double kRecoverWidth = 50.0;
constexpr double kExitWidth = 80.0;

// Amplitude split: this fraction of the acceleration range goes to the
// deceleration trough, the rest to the exit peak; the in-tunnel recovery is
// half the exit peak ("slight acceleration").
constexpr double kTroughShare = 0.45;
constexpr double kRecoverShare = 0.5;

// Per-driver deviation scales, all multiples of noise_scale: the amplitude
// jitter keeps the acceleration-range std near noise_scale itself, the
// baseline jitter spreads mean acceleration, the speed jitter (in seconds,
// converting m/s^2 to m/s) spreads mean speed, and the sinusoid noise rides
// along the track.
constexpr double kBaseJitterShare = 0.1;
constexpr double kSpeedJitterSeconds = 15.0;
constexpr double kTrackNoiseShare = 0.25;
constexpr double kNoiseWavelengths[3] = {140.0, 230.0, 310.0};

constexpr double kMinSpeedSq = 0.01;  // keeps x(t) strictly increasing

// Raised-cosine bump: 0 at the edges with zero slope, 1 at the midpoint.
double bump(double x, double lo, double hi) {
  if (x <= lo || x >= hi) return 0.0;
  return 0.5 * (1.0 - std::cos(kTwoPi * (x - lo) / (hi - lo)));
}

// Integral of the bump from lo to min(x, hi).
double bump_integral(double x, double lo, double hi) {
  if (x <= lo) return 0.0;
  const double w = hi - lo;
  if (x >= hi) return 0.5 * w;
  const double u = x - lo;
  return 0.5 * (u - w / kTwoPi * std::sin(kTwoPi * u / w));
}

double grid_mean_speed(const DriverCurve& curve, double section_start,
                       double section_end) {
  const long lo = static_cast<long>(std::ceil(section_start));
  const long hi = static_cast<long>(std::floor(section_end));
  double sum = 0.0;
  for (long g = lo; g <= hi; ++g) sum += curve.speed_at(static_cast<double>(g));
  return sum / static_cast<double>(hi - lo + 1);
}

// Solve v_start so the curve's grid-mean speed hits the target.
void solve_start_speed(DriverCurve& curve, double target_mean,
                       double section_start, double section_end) {
  double lo = 0.5, hi = 70.0;
  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (lo + hi);
    curve.v_start_sq = mid * mid;
    if (grid_mean_speed(curve, section_start, section_end) < target_mean) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  curve.v_start_sq = 0.25 * (lo + hi) * (lo + hi);
}

DriverCurve make_curve(const ScenarioSpec& sc, const ArchetypeSpec& arch,
                       double amp_scale, double base_jitter,
                       double speed_jitter, double track_noise_std,
                       const double phases[3]) {
  DriverCurve c{};
  c.section_start = sc.section_start;

  c.bump_lo[0] = sc.decel_onset;
  c.bump_hi[0] = sc.decel_onset + kDecelWidth;
  c.bump_lo[1] = sc.accel_onset;
  c.bump_hi[1] = sc.accel_onset + kRecoverWidth;
  c.bump_hi[2] = sc.exit_accel_position + 10.0;
  c.bump_lo[2] = c.bump_hi[2] - kExitWidth;

  const double trough = kTroughShare * arch.accel_range * amp_scale;
  const double exit_peak = (1.0 - kTroughShare) * arch.accel_range * amp_scale;
  c.bump_amp[0] = -trough;
  c.bump_amp[1] = kRecoverShare * exit_peak;
  c.bump_amp[2] = exit_peak;

  // Base acceleration absorbs whatever integral the bumps do not supply so
  // the section-mean acceleration lands on the archetype target.
  double piece = 0.0;
  for (int i = 0; i < 3; ++i) {
    piece += c.bump_amp[i] * 0.5 * (c.bump_hi[i] - c.bump_lo[i]);
  }
  const double span = sc.section_end - sc.section_start;
  c.base_accel = arch.mean_accel - piece / span + base_jitter;

  const double sine_amp = track_noise_std * std::sqrt(2.0 / 3.0);
  for (int i = 0; i < 3; ++i) {
    c.sine_amp[i] = sine_amp;
    c.sine_wavelength[i] = kNoiseWavelengths[i];
    c.sine_phase[i] = phases[i];
  }

  solve_start_speed(c, arch.mean_speed + speed_jitter, sc.section_start,
                    sc.section_end);
  return c;
}

VehicleTrack sample_track(const ScenarioSpec& sc, const DriverCurve& curve,
                          const std::string& id, const std::string& archetype,
                          double entry_time) {
  VehicleTrack track;
  track.vehicle_id = id;
  track.archetype = archetype;
  track.entry_time = entry_time;

  double x = sc.section_start;
  double t = entry_time;
  while (x <= sc.section_end) {
    track.samples.push_back({t, x, curve.speed_at(x), std::nullopt});
    x += curve.speed_at(x) * sc.sample_interval;
    t += sc.sample_interval;
  }
  return track;
}

VehicleTrack generate_vehicle(const ScenarioSpec& sc,
                              const std::vector<ArchetypeSpec>& archetypes,
                              const Rng& vehicle_stream, std::size_t index) {
  Rng rng = vehicle_stream.fork(static_cast<std::uint64_t>(index));

  const double pick = rng.uniform();
  double cum = 0.0;
  std::size_t ai = archetypes.size() - 1;
  for (std::size_t j = 0; j < archetypes.size(); ++j) {
    cum += archetypes[j].mixture_weight;
    if (pick < cum) {
      ai = j;
      break;
    }
  }
  const ArchetypeSpec& arch = archetypes[ai];

  const double ns = arch.noise_scale;
  const double amp_scale =
      arch.accel_range > 0.0 ? 1.0 + rng.normal(0.0, ns / arch.accel_range) : 1.0;
  const double base_jitter = rng.normal(0.0, kBaseJitterShare * ns);
  const double speed_jitter = rng.normal(0.0, kSpeedJitterSeconds * ns);
  double phases[3];
  for (auto& p : phases) p = rng.uniform(0.0, kTwoPi);
  const double entry_time = rng.uniform(0.0, sc.duration);

  const DriverCurve curve =
      make_curve(sc, arch, std::max(amp_scale, 0.1), base_jitter, speed_jitter,
                 kTrackNoiseShare * ns, phases);

  char id[16];
  std::snprintf(id, sizeof(id), "v%05zu", index);
  return sample_track(sc, curve, id, arch.label, entry_time);
}

}  // namespace

double DriverCurve::accel_at(double x) const {
  double a = base_accel;
  for (int i = 0; i < 3; ++i) a += bump_amp[i] * bump(x, bump_lo[i], bump_hi[i]);
  for (int i = 0; i < 3; ++i) {
    a += sine_amp[i] * std::sin(kTwoPi * x / sine_wavelength[i] + sine_phase[i]);
  }
  return a;
}

double DriverCurve::accel_integral(double x) const {
  double f = base_accel * (x - section_start);
  for (int i = 0; i < 3; ++i) {
    f += bump_amp[i] * bump_integral(x, bump_lo[i], bump_hi[i]);
  }
  for (int i = 0; i < 3; ++i) {
    const double k = kTwoPi / sine_wavelength[i];
    f += sine_amp[i] / k *
         (std::cos(k * section_start + sine_phase[i]) - std::cos(k * x + sine_phase[i]));
  }
  return f;
}

double DriverCurve::speed_at(double x) const {
  return std::sqrt(std::max(v_start_sq + 2.0 * accel_integral(x), kMinSpeedSq));
}

void validate_scenario(const ScenarioSpec& sc,
                       const std::vector<ArchetypeSpec>& archetypes) {
  if (sc.n_vehicles < 1) throw ValidationError("scenario: n_vehicles must be >= 1");
  if (sc.duration <= 0.0) throw ValidationError("scenario: duration must be positive");
  if (sc.sample_interval <= 0.0) {
    throw ValidationError("scenario: sample_interval must be positive");
  }
  if (!(sc.section_start < sc.section_end)) {
    throw ValidationError("scenario: empty section range");
  }
  for (double marker : {sc.decel_onset, sc.accel_onset, sc.exit_accel_position}) {
    if (marker <= sc.section_start || marker >= sc.section_end) {
      throw ValidationError("scenario: event marker " + std::to_string(marker) +
                            " outside section range");
    }
  }
  if (archetypes.empty()) throw ValidationError("scenario: no archetypes");
  double weight_sum = 0.0;
  for (const auto& a : archetypes) {
    if (a.mean_speed <= 0.0) {
      throw ValidationError("archetype " + a.label + ": mean_speed must be positive");
    }
    if (a.accel_range <= 0.0) {
      throw ValidationError("archetype " + a.label + ": accel_range must be positive");
    }
    if (a.noise_scale < 0.0) {
      throw ValidationError("archetype " + a.label + ": negative noise_scale");
    }
    weight_sum += a.mixture_weight;
  }
  if (std::abs(weight_sum - 1.0) > 1e-9) {
    throw ValidationError("archetypes: mixture weights sum to " +
                          std::to_string(weight_sum) + ", expected 1");
  }
}

std::vector<ArchetypeSpec> default_archetypes(double noise_scale) {
  return {
      {"conservative", 21.7648, 0.0843, 0.8805, 1.0 / 3.0, noise_scale},
      {"moderate", 25.7631, 0.1198, 1.1023, 1.0 / 3.0, noise_scale},
      {"aggressive", 28.0423, 0.1201, 1.0383, 1.0 - 2.0 / 3.0, noise_scale},
  };
}

DriverCurve archetype_base_curve(const ScenarioSpec& scenario,
                                 const ArchetypeSpec& archetype) {
  const double phases[3] = {0.0, 0.0, 0.0};
  return make_curve(scenario, archetype, 1.0, 0.0, 0.0, 0.0, phases);
}

namespace serial {
std::vector<VehicleTrack> generate_population(
    const ScenarioSpec& sc, const std::vector<ArchetypeSpec>& archetypes) {
  validate_scenario(sc, archetypes);
  const Rng stream = Rng(sc.seed).fork("generation");
  std::vector<VehicleTrack> tracks(static_cast<std::size_t>(sc.n_vehicles));
  for (std::size_t i = 0; i < tracks.size(); ++i) {
    tracks[i] = generate_vehicle(sc, archetypes, stream, i);
  }
  return tracks;
}
}  // namespace serial

std::vector<VehicleTrack> generate_population(
    const ScenarioSpec& sc, const std::vector<ArchetypeSpec>& archetypes) {
  validate_scenario(sc, archetypes);
  const Rng stream = Rng(sc.seed).fork("generation");
  std::vector<VehicleTrack> tracks(static_cast<std::size_t>(sc.n_vehicles));
  const long n = static_cast<long>(tracks.size());
  ExceptionCollector exc;
#pragma omp parallel for schedule(static)
  for (long i = 0; i < n; ++i) {
    exc.run([&, i] {
      tracks[static_cast<std::size_t>(i)] =
          generate_vehicle(sc, archetypes, stream, static_cast<std::size_t>(i));
    });
  }
  exc.rethrow();
  return tracks;
}

std::map<std::string, ArchetypeSummary> summarize_population(
    const std::vector<VehicleTrack>& tracks) {
  const auto profiles = resample_population(tracks);
  std::map<std::string, ArchetypeSummary> summary;
  for (const auto& profile : profiles) {
    if (profile.archetype.empty()) {
      throw ValidationError("summarize_population: track " + profile.vehicle_id +
                            " has no archetype label");
    }
    const DriverFeatures f = compute_features(profile);
    auto& s = summary[profile.archetype];
    s.count += 1;
    s.accel_range_mean += f.accel_range;
    s.avg_speed_mean += f.avg_speed;
    s.avg_accel_mean += f.avg_accel;
  }
  for (auto& [label, s] : summary) {
    s.accel_range_mean /= static_cast<double>(s.count);
    s.avg_speed_mean /= static_cast<double>(s.count);
    s.avg_accel_mean /= static_cast<double>(s.count);
  }
  return summary;
}

}  // namespace acp
