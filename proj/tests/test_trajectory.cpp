#include <doctest.h>

#include "accelpred/common.hpp"
#include "accelpred/rng.hpp"
#include "accelpred/trajectory.hpp"
#include "test_support.hpp"

using namespace acp;

TEST_SUITE_BEGIN("trajectory");

TEST_CASE("differentiate: constant speed gives zero acceleration") {
  auto t = differentiate_speed(
      test::make_track("a", {{0, 0, 10}, {0.05, 0.5, 10}, {0.10, 1.0, 10}}));
  for (const auto& s : t.samples) CHECK(*s.a == doctest::Approx(0.0));
}

TEST_CASE("differentiate: linear ramp hand values") {
  auto t = differentiate_speed(
      test::make_track("a", {{0, 0, 10.0}, {0.05, 0.5, 10.5}, {0.10, 1.03, 11.0}}));
  CHECK(*t.samples[0].a == doctest::Approx(10.0));  // (10.5-10)/0.05
  CHECK(*t.samples[1].a == doctest::Approx(10.0));  // (11-10)/0.10
  CHECK(*t.samples[2].a == doctest::Approx(10.0));  // (11-10.5)/0.05
}

TEST_CASE("differentiate: two-sample track uses the single forward difference") {
  auto t = differentiate_speed(test::make_track("a", {{0, 0, 20}, {0.05, 1.0, 21}}));
  CHECK(*t.samples[0].a == doctest::Approx(20.0));
  CHECK(*t.samples[1].a == doctest::Approx(20.0));
}

TEST_CASE("differentiate: affine v(t) gives the exact slope at interior samples") {
  Rng rng(3);
  VehicleTrack track;
  track.vehicle_id = "affine";
  double t = 0.0, x = 0.0;
  for (int i = 0; i < 50; ++i) {
    const double v = 15.0 + 0.8 * t;
    track.samples.push_back({t, x, v, std::nullopt});
    const double dt = 0.04 + 0.02 * rng.uniform();  // non-uniform sampling
    x += v * dt;
    t += dt;
  }
  const auto out = differentiate_speed(track);
  for (std::size_t i = 1; i + 1 < out.samples.size(); ++i) {
    CHECK(*out.samples[i].a == doctest::Approx(0.8).epsilon(1e-9));
  }
}

TEST_CASE("differentiate: rejects a one-sample track") {
  VehicleTrack t;
  t.vehicle_id = "short";
  t.samples.push_back({0, 0, 1, std::nullopt});
  CHECK_THROWS_AS(differentiate_speed(t), ValidationError);
}

TEST_CASE("track validation rejects non-increasing x and negative speed") {
  CHECK_THROWS_AS(
      validate_track(test::make_track("a", {{0, 0, 10}, {0.05, 0.0, 10}})),
      ValidationError);
  CHECK_THROWS_AS(
      validate_track(test::make_track("a", {{0, 0, 10}, {0.05, -0.1, 10}})),
      ValidationError);
  CHECK_THROWS_AS(validate_track(test::make_track("a", {{0, 0, -1}, {0.05, 1, 10}})),
                  ValidationError);
}

TEST_CASE("resample: bracketing example") {
  // (x=4.2, a=1.0), (x=5.6, a=2.4); grid point 5 -> 1.8
  VehicleTrack track = test::make_track("a", {{0, 4.2, 10}, {0.05, 5.6, 10}});
  track.samples[0].a = 1.0;
  track.samples[1].a = 2.4;
  const auto p = resample_to_grid(track);
  REQUIRE(p.size() == 1);
  CHECK(p.first_index == 5);
  CHECK(p.a_at[0] == doctest::Approx(1.8).epsilon(1e-12));
}

TEST_CASE("resample: grid point on a sample is exact at both ends") {
  VehicleTrack track =
      test::make_track("a", {{0, 3.0, 10}, {0.05, 4.5, 11}, {0.10, 6.0, 12}});
  track.samples[0].a = 0.5;
  track.samples[1].a = 0.7;
  track.samples[2].a = 0.9;
  const auto p = resample_to_grid(track);
  CHECK(p.first_index == 3);
  CHECK(p.a_index(3) == doctest::Approx(0.5).epsilon(1e-12));  // left endpoint
  CHECK(p.a_index(6) == doctest::Approx(0.9).epsilon(1e-12));  // x_LI == x_t
}

TEST_CASE("resample: affine a(x) reproduced exactly, grid covers ceil..floor") {
  Rng rng(17);
  for (int rep = 0; rep < 20; ++rep) {
    const double alpha = rng.normal(0.0, 0.3);
    const double beta = rng.normal(0.0, 1.0);
    VehicleTrack track;
    track.vehicle_id = "affine";
    double x = -20.0 + rng.uniform();
    double t = 0.0;
    while (x < 25.0) {
      track.samples.push_back({t, x, 20.0, alpha * x + beta});
      x += 0.3 + 1.4 * rng.uniform();
      t += 0.05;
    }
    const auto p = resample_to_grid(track);
    CHECK(p.first_index ==
          static_cast<long>(std::ceil(track.samples.front().x - 1e-12)));
    CHECK(p.last_index() ==
          static_cast<long>(std::floor(track.samples.back().x + 1e-12)));
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double pos = p.position(i);
      CHECK(p.a_at[i] == doctest::Approx(alpha * pos + beta).epsilon(1e-9));
    }
  }
}

TEST_CASE("resample: interpolated value bounded by its bracket") {
  Rng rng(23);
  for (int rep = 0; rep < 50; ++rep) {
    VehicleTrack track;
    track.vehicle_id = "b";
    double x = rng.uniform(-3.0, -2.0);
    double t = 0.0;
    for (int i = 0; i < 12; ++i) {
      track.samples.push_back({t, x, 5.0 + rng.uniform(), rng.normal(0.0, 1.0)});
      x += 0.2 + rng.uniform();
      t += 0.05;
    }
    const auto p = resample_to_grid(track);
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double pos = p.position(i);
      std::size_t k = 1;
      while (k + 1 < track.samples.size() && track.samples[k].x < pos) ++k;
      const double lo = std::min(*track.samples[k - 1].a, *track.samples[k].a);
      const double hi = std::max(*track.samples[k - 1].a, *track.samples[k].a);
      CHECK(p.a_at[i] >= lo - 1e-12);
      CHECK(p.a_at[i] <= hi + 1e-12);
    }
  }
}

TEST_CASE("resample: duplicate x in the bracket is a degenerate-geometry error") {
  VehicleTrack track;
  track.vehicle_id = "dup";
  track.samples.push_back({0.00, 1.0, 10, 0.1});
  track.samples.push_back({0.05, 2.0, 10, 0.2});
  track.samples.push_back({0.10, 2.0, 10, 0.3});  // duplicate x
  track.samples.push_back({0.15, 3.0, 10, 0.4});
  CHECK_THROWS_AS(resample_to_grid(track), ValidationError);
}

TEST_CASE("extract_window: spans and lengths") {
  SpatialProfile p;
  p.vehicle_id = "w";
  p.first_index = -380;
  for (long g = -380; g <= 320; ++g) {
    p.v_at.push_back(20.0);
    p.a_at.push_back(static_cast<double>(g));  // a encodes the position
  }
  auto w = extract_window(p, -100, 100, 50);
  REQUIRE(w.has_value());
  CHECK(w->history.size() == 100);
  CHECK(w->target.size() == 50);
  CHECK(w->history.front()[1] == doctest::Approx(-199));  // (-200, -100]
  CHECK(w->history.back()[1] == doctest::Approx(-100));
  CHECK(w->target.front() == doctest::Approx(-99));  // (-100, -50]
  CHECK(w->target.back() == doctest::Approx(-50));

  auto w10 = extract_window(p, -100, 100, 10);
  REQUIRE(w10.has_value());
  CHECK(w10->target.size() == 10);

  CHECK_FALSE(extract_window(p, -350, 100, 50).has_value());  // needs -450
  CHECK(extract_window(p, -280, 100, 50).has_value());
  CHECK_FALSE(extract_window(p, -281, 100, 50).has_value());
  CHECK(extract_window(p, 270, 100, 50).has_value());
  CHECK_FALSE(extract_window(p, 271, 100, 50).has_value());
}

TEST_SUITE_END();
