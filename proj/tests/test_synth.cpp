#include <cmath>
#include <doctest.h>

#include "accelpred/clustering.hpp"
#include "accelpred/env.hpp"
#include "accelpred/synth.hpp"

using namespace acp;

namespace {

ScenarioSpec small_scenario(int n, std::uint64_t seed) {
  ScenarioSpec sc;
  sc.n_vehicles = n;
  sc.duration = 1800.0;
  sc.seed = seed;
  return sc;
}

}  // namespace

TEST_SUITE_BEGIN("synth");

TEST_CASE("same seed twice gives identical track lists") {
  const auto a = generate_population(small_scenario(40, 11), default_archetypes());
  const auto b = generate_population(small_scenario(40, 11), default_archetypes());
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].vehicle_id == b[i].vehicle_id);
    CHECK(a[i].archetype == b[i].archetype);
    CHECK(a[i].entry_time == b[i].entry_time);
    REQUIRE(a[i].samples.size() == b[i].samples.size());
    for (std::size_t j = 0; j < a[i].samples.size(); ++j) {
      CHECK(a[i].samples[j].t == b[i].samples[j].t);
      CHECK(a[i].samples[j].x == b[i].samples[j].x);
      CHECK(a[i].samples[j].v == b[i].samples[j].v);
    }
  }
}

TEST_CASE("speeds nonnegative, x strictly increasing, 20 Hz sampling") {
  const auto tracks = generate_population(small_scenario(60, 5), default_archetypes());
  for (const auto& t : tracks) {
    REQUIRE(t.samples.size() >= 2);
    for (std::size_t j = 0; j < t.samples.size(); ++j) {
      CHECK(t.samples[j].v >= 0.0);
      if (j > 0) {
        CHECK(t.samples[j].x > t.samples[j - 1].x);
        CHECK(t.samples[j].t - t.samples[j - 1].t == doctest::Approx(0.05));
      }
    }
    CHECK(t.samples.front().x == doctest::Approx(-380.0));
    CHECK(t.samples.back().x >= 320.0 - 2.0);
  }
}

TEST_CASE("noiseless archetype: every vehicle shares one profile shape") {
  auto archetypes = default_archetypes(0.0);
  archetypes = {archetypes[1]};
  archetypes[0].mixture_weight = 1.0;
  const auto tracks = generate_population(small_scenario(6, 3), archetypes);
  const auto profiles = resample_population(tracks);
  for (std::size_t i = 1; i < profiles.size(); ++i) {
    REQUIRE(profiles[i].size() == profiles[0].size());
    for (std::size_t g = 0; g < profiles[0].size(); ++g) {
      CHECK(profiles[i].v_at[g] == doctest::Approx(profiles[0].v_at[g]).epsilon(1e-12));
      CHECK(profiles[i].a_at[g] == doctest::Approx(profiles[0].a_at[g]).epsilon(1e-12));
    }
  }
  // noiseless features hit the archetype targets
  const auto f = compute_features(profiles[0]);
  CHECK(f.avg_speed == doctest::Approx(archetypes[0].mean_speed).epsilon(2e-3));
  CHECK(f.avg_accel == doctest::Approx(archetypes[0].mean_accel).epsilon(2e-2));
  CHECK(f.accel_range == doctest::Approx(archetypes[0].accel_range).epsilon(2e-2));
}

TEST_CASE("base curve: accel_at is the derivative of the speed curve") {
  const ScenarioSpec sc = small_scenario(1, 1);
  for (const auto& arch : default_archetypes()) {
    const DriverCurve curve = archetype_base_curve(sc, arch);
    for (double x : {-300.0, -150.0, -70.0, 0.0, 90.0, 250.0}) {
      const double h = 1e-4;
      const double dv2 =
          (curve.speed_at(x + h) * curve.speed_at(x + h) -
           curve.speed_at(x - h) * curve.speed_at(x - h)) / (2.0 * h);
      CHECK(curve.accel_at(x) == doctest::Approx(0.5 * dv2).epsilon(1e-6));
    }
  }
}

TEST_CASE("population calibration matches the archetype statistics") {
  const auto tracks = generate_population(small_scenario(600, 21), default_archetypes());
  const auto summary = summarize_population(tracks);
  REQUIRE(summary.size() == 3);

  const auto& cons = summary.at("conservative");
  const auto& mod = summary.at("moderate");
  const auto& agg = summary.at("aggressive");

  CHECK(cons.avg_speed_mean == doctest::Approx(21.7648).epsilon(0.05));
  CHECK(mod.avg_speed_mean == doctest::Approx(25.7631).epsilon(0.05));
  CHECK(agg.avg_speed_mean == doctest::Approx(28.0423).epsilon(0.05));
  // speed ordering is strictly preserved
  CHECK(cons.avg_speed_mean < mod.avg_speed_mean);
  CHECK(mod.avg_speed_mean < agg.avg_speed_mean);

  CHECK(cons.accel_range_mean == doctest::Approx(0.8805).epsilon(0.10));
  CHECK(mod.accel_range_mean == doctest::Approx(1.1023).epsilon(0.10));
  CHECK(agg.accel_range_mean == doctest::Approx(1.0383).epsilon(0.10));
  // the non-monotone range pattern: moderate is the widest
  CHECK(mod.accel_range_mean > agg.accel_range_mean);
  CHECK(agg.accel_range_mean > cons.accel_range_mean);
}

TEST_CASE("summarize_population: hand-built constant tracks") {
  VehicleTrack a, b;
  a.vehicle_id = "a";
  a.archetype = "x";
  b.vehicle_id = "b";
  b.archetype = "x";
  for (int i = 0; i <= 40; ++i) {
    a.samples.push_back({0.05 * i, -2.0 + 0.5 * i, 10.0, std::nullopt});
    b.samples.push_back({0.05 * i, -2.0 + 1.0 * i, 20.0, std::nullopt});
  }
  const auto summary = summarize_population({a, b});
  REQUIRE(summary.size() == 1);
  const auto& s = summary.at("x");
  CHECK(s.count == 2);
  CHECK(s.avg_speed_mean == doctest::Approx(15.0));
  CHECK(s.avg_accel_mean == doctest::Approx(0.0));
  CHECK(s.accel_range_mean == doctest::Approx(0.0));
}

TEST_CASE("summarize_population: unlabeled tracks are an error") {
  VehicleTrack t;
  t.vehicle_id = "t";
  t.samples.push_back({0.0, 0.0, 10.0, std::nullopt});
  t.samples.push_back({0.05, 0.5, 10.0, std::nullopt});
  CHECK_THROWS_AS(summarize_population({t}), ValidationError);
}

TEST_CASE("population percentile acceleration curves have the tunnel-exit shape") {
  const auto tracks = generate_population(small_scenario(300, 9), default_archetypes());
  const auto profiles = resample_population(tracks);
  double window_end = 0.0;
  for (const auto& p : profiles) window_end = std::max(window_end, p.entry_time);
  const auto env = build_env_sequence(profiles, window_end + 1.0, window_end + 2.0,
                                      -380, 320, 5);

  for (int c = 4; c < 8; ++c) {  // the four acceleration percentile channels
    long argmin = 0;
    double vmin = 1e300;
    for (long g = -380; g <= 320; ++g) {
      if (!env.present_at(g)) continue;
      const double v = env.row_at(g)[static_cast<std::size_t>(c)];
      if (v < vmin) {
        vmin = v;
        argmin = g;
      }
    }
    CHECK(argmin >= -200);
    CHECK(argmin <= -120);

    // local maximum from the in-tunnel recovery
    long argmax_tunnel = -120;
    double vmax_tunnel = -1e300;
    for (long g = -120; g <= -20; ++g) {
      const double v = env.row_at(g)[static_cast<std::size_t>(c)];
      if (v > vmax_tunnel) {
        vmax_tunnel = v;
        argmax_tunnel = g;
      }
    }
    CHECK(argmax_tunnel >= -100);
    CHECK(argmax_tunnel <= -30);

    // post-exit acceleration peak
    long argmax_exit = 0;
    double vmax_exit = -1e300;
    for (long g = 0; g <= 320; ++g) {
      const double v = env.row_at(g)[static_cast<std::size_t>(c)];
      if (v > vmax_exit) {
        vmax_exit = v;
        argmax_exit = g;
      }
    }
    CHECK(argmax_exit >= 40);
    CHECK(argmax_exit <= 130);
  }
}

TEST_CASE("scenario validation") {
  ScenarioSpec sc = small_scenario(0, 1);
  CHECK_THROWS_AS(generate_population(sc, default_archetypes()), ValidationError);

  sc = small_scenario(5, 1);
  auto bad = default_archetypes();
  bad[0].mixture_weight = 0.5;  // weights no longer sum to 1
  CHECK_THROWS_AS(generate_population(sc, bad), ValidationError);

  sc = small_scenario(5, 1);
  sc.decel_onset = -500.0;
  CHECK_THROWS_AS(generate_population(sc, default_archetypes()), ValidationError);
}

TEST_SUITE_END();
