#include <algorithm>
#include <doctest.h>

#include "accelpred/common.hpp"
#include "accelpred/env.hpp"
#include "accelpred/rng.hpp"

using namespace acp;

namespace {

// Test-local order-statistic oracle: sort a copy, rank q*(n-1), linear
// interpolation between the neighbors.
double oracle_percentile(std::vector<double> values, double q) {
  std::sort(values.begin(), values.end());
  const double rank = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(rank));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = rank - std::floor(rank);
  return values[lo] * (1.0 - frac) + values[hi] * frac;
}

SpatialProfile flat_profile(const std::string& id, double entry, long first, long last,
                            double v, double a) {
  SpatialProfile p;
  p.vehicle_id = id;
  p.entry_time = entry;
  p.first_index = first;
  for (long g = first; g <= last; ++g) {
    p.v_at.push_back(v);
    p.a_at.push_back(a);
  }
  return p;
}

}  // namespace

TEST_SUITE_BEGIN("env");

TEST_CASE("percentiles of {1..5}") {
  std::vector<SpatialProfile> profiles;
  for (int i = 1; i <= 5; ++i) {
    profiles.push_back(flat_profile("v" + std::to_string(i), 10.0 * i, 0, 3,
                                    static_cast<double>(i), static_cast<double>(i)));
  }
  const auto env = build_env_sequence(profiles, 100.0, 100.0, 0, 3, 1);
  for (std::size_t i = 0; i < env.size(); ++i) {
    REQUIRE(env.present[i] == 1);
    CHECK(env.support[i] == 5);
    CHECK(env.rows[i][0] == doctest::Approx(1.8).epsilon(1e-12));
    CHECK(env.rows[i][1] == doctest::Approx(2.6).epsilon(1e-12));
    CHECK(env.rows[i][2] == doctest::Approx(3.4).epsilon(1e-12));
    CHECK(env.rows[i][3] == doctest::Approx(4.2).epsilon(1e-12));
    CHECK(env.rows[i][4] == doctest::Approx(1.8).epsilon(1e-12));
    CHECK(env.rows[i][7] == doctest::Approx(4.2).epsilon(1e-12));
  }
}

TEST_CASE("identical vehicles give the common value at every percentile") {
  std::vector<SpatialProfile> profiles;
  for (int i = 0; i < 7; ++i) {
    profiles.push_back(flat_profile("v" + std::to_string(i), 1.0 * i, -2, 2, 22.5, 0.3));
  }
  const auto env = build_env_sequence(profiles, 50.0, 50.0, -2, 2, 1);
  for (std::size_t i = 0; i < env.size(); ++i) {
    for (int c = 0; c < 4; ++c) CHECK(env.rows[i][c] == doctest::Approx(22.5));
    for (int c = 4; c < 8; ++c) CHECK(env.rows[i][c] == doctest::Approx(0.3));
  }
}

TEST_CASE("empty window marks every position absent") {
  std::vector<SpatialProfile> profiles = {flat_profile("v", 100.0, 0, 5, 20, 0)};
  const auto env = build_env_sequence(profiles, 50.0, 10.0, 0, 5, 1);
  for (std::size_t i = 0; i < env.size(); ++i) {
    CHECK(env.present[i] == 0);
    CHECK(env.support[i] == 0);
  }
}

TEST_CASE("window is half-open: entry_time == window_end is excluded") {
  std::vector<SpatialProfile> profiles = {
      flat_profile("in", 40.0, 0, 2, 10, 0),
      flat_profile("boundary", 50.0, 0, 2, 99, 9),
  };
  const auto env = build_env_sequence(profiles, 50.0, 20.0, 0, 2, 1);
  CHECK(env.support[0] == 1);
  CHECK(env.rows[0][0] == doctest::Approx(10.0));
  // start edge is included
  const auto env2 = build_env_sequence(profiles, 60.0, 20.0, 0, 2, 1);
  CHECK(env2.support[0] == 2);
}

TEST_CASE("positions below min support are absent") {
  std::vector<SpatialProfile> profiles;
  for (int i = 0; i < 6; ++i) {
    // only three vehicles extend to position 5
    profiles.push_back(flat_profile("v" + std::to_string(i), 1.0, 0, i < 3 ? 5 : 2, 20, 0));
  }
  const auto env = build_env_sequence(profiles, 10.0, 10.0, 0, 5, 5);
  CHECK(env.present_at(1) == true);
  CHECK(env.support[0] == 6);
  CHECK(env.present_at(5) == false);
  CHECK(env.support[5] == 3);
}

TEST_CASE("oracle equivalence and monotonicity on random instances") {
  Rng rng(404);
  for (int rep = 0; rep < 200; ++rep) {
    const int n_vehicles = 1 + static_cast<int>(rng.below(12));
    const long last = static_cast<long>(rng.below(4));
    std::vector<SpatialProfile> profiles;
    std::vector<std::vector<double>> v_vals(static_cast<std::size_t>(last + 1)),
        a_vals(static_cast<std::size_t>(last + 1));
    for (int i = 0; i < n_vehicles; ++i) {
      SpatialProfile p;
      p.vehicle_id = "v" + std::to_string(i);
      p.entry_time = rng.uniform(0.0, 10.0);
      p.first_index = 0;
      for (long g = 0; g <= last; ++g) {
        const double v = rng.uniform(0.0, 30.0);
        const double a = rng.normal(0.0, 1.0);
        p.v_at.push_back(v);
        p.a_at.push_back(a);
        v_vals[static_cast<std::size_t>(g)].push_back(v);
        a_vals[static_cast<std::size_t>(g)].push_back(a);
      }
      profiles.push_back(p);
    }
    const auto env = build_env_sequence(profiles, 11.0, 11.0, 0, last, 1);
    for (long g = 0; g <= last; ++g) {
      const auto i = static_cast<std::size_t>(g);
      for (std::size_t q = 0; q < kEnvPercentiles.size(); ++q) {
        CHECK(env.rows[i][q] ==
              doctest::Approx(oracle_percentile(v_vals[i], kEnvPercentiles[q]))
                  .epsilon(1e-9));
        CHECK(env.rows[i][q + 4] ==
              doctest::Approx(oracle_percentile(a_vals[i], kEnvPercentiles[q]))
                  .epsilon(1e-9));
      }
      for (int c = 0; c < 3; ++c) {
        CHECK(env.rows[i][c] <= env.rows[i][c + 1] + 1e-12);
        CHECK(env.rows[i][c + 4] <= env.rows[i][c + 5] + 1e-12);
      }
    }
  }
}

TEST_CASE("adding a vehicle above the p80 never decreases any percentile") {
  Rng rng(7);
  std::vector<SpatialProfile> profiles;
  for (int i = 0; i < 9; ++i) {
    profiles.push_back(
        flat_profile("v" + std::to_string(i), 1.0, 0, 4, rng.uniform(5.0, 25.0),
                     rng.normal(0.0, 0.5)));
  }
  const auto before = build_env_sequence(profiles, 10.0, 10.0, 0, 4, 1);
  profiles.push_back(flat_profile("big", 1.0, 0, 4, 100.0, 50.0));
  const auto after = build_env_sequence(profiles, 10.0, 10.0, 0, 4, 1);
  for (std::size_t i = 0; i < before.size(); ++i) {
    for (int c = 0; c < kEnvChannels; ++c) {
      CHECK(after.rows[i][c] >= before.rows[i][c] - 1e-12);
    }
  }
}

TEST_CASE("slice_env shapes and rejection") {
  std::vector<SpatialProfile> profiles;
  for (int i = 0; i < 5; ++i) {
    profiles.push_back(flat_profile("v" + std::to_string(i), 1.0, -10, 60, 20.0, 0.1));
  }
  const auto env = build_env_sequence(profiles, 10.0, 10.0, -10, 60, 5);

  auto seg = slice_env(env, 0, 50);
  REQUIRE(seg.has_value());
  CHECK(seg->size() == 50);
  for (const auto& row : *seg) {
    for (int c = 0; c < 4; ++c) CHECK(row[static_cast<std::size_t>(c)] == doctest::Approx(20.0));
  }
  CHECK_FALSE(slice_env(env, 59, 50).has_value());   // runs past the section end
  CHECK_FALSE(slice_env(env, -30, 10).has_value());  // outside the grid
  CHECK(slice_env(env, 10, 50).has_value());
}

TEST_SUITE_END();
