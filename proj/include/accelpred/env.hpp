#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "accelpred/trajectory.hpp"

namespace acp {

// Channel layout of one environmental row: speed then acceleration, each at
// the 20/40/60/80th percentiles.
inline constexpr int kEnvChannels = 8;
inline constexpr std::array<double, 4> kEnvPercentiles = {0.2, 0.4, 0.6, 0.8};

using EnvRow = std::array<double, kEnvChannels>;

// Percentile statistics of the vehicles that entered the section during a
// historical time window, per 1 m grid position. Positions with support
// below the configured minimum are absent.
struct EnvSequence {
  double window_start = 0;
  double window_end = 0;
  long first_index = 0;
  std::vector<EnvRow> rows;
  std::vector<std::uint32_t> support;
  std::vector<std::uint8_t> present;

  std::size_t size() const { return rows.size(); }
  long last_index() const { return first_index + static_cast<long>(size()) - 1; }
  bool present_at(long idx) const {
    if (idx < first_index || idx > last_index()) return false;
    return present[static_cast<std::size_t>(idx - first_index)] != 0;
  }
  const EnvRow& row_at(long idx) const {
    return rows[static_cast<std::size_t>(idx - first_index)];
  }
};

// Linear interpolation between order statistics at rank q*(n-1); `sorted`
// must be ascending and non-empty.
double percentile_sorted(const std::vector<double>& sorted, double q);

// Percentiles over the vehicles with entry_time in
// [window_end - window_len, window_end), evaluated at every grid position in
// [grid_first, grid_last]. OpenMP over positions; serial:: is the reference.
EnvSequence build_env_sequence(const std::vector<SpatialProfile>& profiles,
                               double window_end, double window_len,
                               long grid_first, long grid_last,
                               std::uint32_t min_support = 5);

namespace serial {
EnvSequence build_env_sequence(const std::vector<SpatialProfile>& profiles,
                               double window_end, double window_len,
                               long grid_first, long grid_last,
                               std::uint32_t min_support = 5);
}

// The 8-channel rows over (anchor, anchor + horizon]; empty if any position
// in the span is absent.
std::optional<std::vector<EnvRow>> slice_env(const EnvSequence& env, long anchor,
                                             long horizon);

}  // namespace acp
