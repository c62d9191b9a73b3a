#include "accelpred/env.hpp"

#include <algorithm>
#include <cmath>

#include "accelpred/common.hpp"
#include "accelpred/parallel.hpp"

namespace acp {
namespace {

void fill_position(const std::vector<const SpatialProfile*>& window,
                   long idx, std::uint32_t min_support, EnvRow& row,
                   std::uint32_t& support, std::uint8_t& present) {
  std::vector<double> v_vals, a_vals;
  for (const auto* p : window) {
    if (p->covers(idx, idx)) {
      v_vals.push_back(p->v_index(idx));
      a_vals.push_back(p->a_index(idx));
    }
  }
  support = static_cast<std::uint32_t>(v_vals.size());
  if (support < std::max(min_support, 1u)) {
    present = 0;
    row.fill(0.0);
    return;
  }
  std::sort(v_vals.begin(), v_vals.end());
  std::sort(a_vals.begin(), a_vals.end());
  for (std::size_t q = 0; q < kEnvPercentiles.size(); ++q) {
    row[q] = percentile_sorted(v_vals, kEnvPercentiles[q]);
    row[q + 4] = percentile_sorted(a_vals, kEnvPercentiles[q]);
  }
  present = 1;
}

std::vector<const SpatialProfile*> window_profiles(
    const std::vector<SpatialProfile>& profiles, double window_start,
    double window_end) {
  std::vector<const SpatialProfile*> window;
  for (const auto& p : profiles) {
    if (p.entry_time >= window_start && p.entry_time < window_end) {
      window.push_back(&p);
    }
  }
  return window;
}

EnvSequence make_sequence(double window_start, double window_end,
                          long grid_first, long grid_last) {
  EnvSequence env;
  env.window_start = window_start;
  env.window_end = window_end;
  env.first_index = grid_first;
  const auto n = static_cast<std::size_t>(grid_last - grid_first + 1);
  env.rows.assign(n, EnvRow{});
  env.support.assign(n, 0);
  env.present.assign(n, 0);
  return env;
}

}  // namespace

double percentile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) throw ValidationError("percentile_sorted: empty input");
  if (q < 0.0 || q > 1.0) throw ValidationError("percentile_sorted: q outside [0, 1]");
  const double rank = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(rank);
  const double frac = rank - static_cast<double>(lo);
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

namespace serial {
EnvSequence build_env_sequence(const std::vector<SpatialProfile>& profiles,
                               double window_end, double window_len,
                               long grid_first, long grid_last,
                               std::uint32_t min_support) {
  if (window_len <= 0.0) throw ValidationError("build_env_sequence: window_len must be positive");
  if (grid_last < grid_first) throw ValidationError("build_env_sequence: empty grid");

  EnvSequence env = make_sequence(window_end - window_len, window_end, grid_first, grid_last);
  const auto window = window_profiles(profiles, env.window_start, env.window_end);
  for (long idx = grid_first; idx <= grid_last; ++idx) {
    const auto i = static_cast<std::size_t>(idx - grid_first);
    fill_position(window, idx, min_support, env.rows[i], env.support[i], env.present[i]);
  }
  return env;
}
}  // namespace serial

EnvSequence build_env_sequence(const std::vector<SpatialProfile>& profiles,
                               double window_end, double window_len,
                               long grid_first, long grid_last,
                               std::uint32_t min_support) {
  if (window_len <= 0.0) throw ValidationError("build_env_sequence: window_len must be positive");
  if (grid_last < grid_first) throw ValidationError("build_env_sequence: empty grid");

  EnvSequence env = make_sequence(window_end - window_len, window_end, grid_first, grid_last);
  const auto window = window_profiles(profiles, env.window_start, env.window_end);
  const long n = grid_last - grid_first + 1;
  ExceptionCollector exc;
#pragma omp parallel for schedule(static)
  for (long off = 0; off < n; ++off) {
    exc.run([&, off] {
      const auto i = static_cast<std::size_t>(off);
      fill_position(window, grid_first + off, min_support, env.rows[i],
                    env.support[i], env.present[i]);
    });
  }
  exc.rethrow();
  return env;
}

std::optional<std::vector<EnvRow>> slice_env(const EnvSequence& env, long anchor,
                                             long horizon) {
  if (horizon <= 0) throw ValidationError("slice_env: horizon must be positive");
  std::vector<EnvRow> out;
  out.reserve(static_cast<std::size_t>(horizon));
  for (long idx = anchor + 1; idx <= anchor + horizon; ++idx) {
    if (!env.present_at(idx)) return std::nullopt;
    out.push_back(env.row_at(idx));
  }
  return out;
}

}  // namespace acp
