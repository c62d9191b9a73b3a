#include "accelpred/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "accelpred/common.hpp"
#include "accelpred/parallel.hpp"

namespace acp {
namespace {

using FeatureRow = std::array<double, 3>;

double sq_dist(const FeatureRow& a, const FeatureRow& b) {
  double s = 0.0;
  for (int d = 0; d < 3; ++d) {
    const double diff = a[d] - b[d];
    s += diff * diff;
  }
  return s;
}

struct Standardized {
  std::vector<FeatureRow> rows;
  FeatureRow mean{};
  FeatureRow std{};
};

Standardized standardize(const std::vector<DriverFeatures>& features) {
  Standardized out;
  const double n = static_cast<double>(features.size());
  out.rows.resize(features.size());
  for (const auto& f : features) {
    out.mean[0] += f.accel_range;
    out.mean[1] += f.avg_speed;
    out.mean[2] += f.avg_accel;
  }
  for (auto& m : out.mean) m /= n;
  for (const auto& f : features) {
    const FeatureRow raw = {f.accel_range, f.avg_speed, f.avg_accel};
    for (int d = 0; d < 3; ++d) {
      const double diff = raw[d] - out.mean[d];
      out.std[d] += diff * diff;
    }
  }
  for (auto& s : out.std) s = std::sqrt(s / n);
  for (auto& s : out.std) {
    if (s == 0.0) s = 1.0;  // constant column: leave it centered at zero
  }
  for (std::size_t i = 0; i < features.size(); ++i) {
    const FeatureRow raw = {features[i].accel_range, features[i].avg_speed,
                            features[i].avg_accel};
    for (int d = 0; d < 3; ++d) {
      out.rows[i][d] = (raw[d] - out.mean[d]) / out.std[d];
    }
  }
  return out;
}

// Order-invariant view of the points: draws during seeding index into this
// ordering, so permuting the input rows cannot change the chosen centers.
std::vector<std::size_t> canonical_order(const std::vector<FeatureRow>& rows) {
  std::vector<std::size_t> order(rows.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return rows[a] < rows[b];
  });
  return order;
}

struct LloydRun {
  std::vector<FeatureRow> centers;
  std::vector<int> assignment;
  double objective = 0;
  std::vector<double> history;
};

int nearest_center(const FeatureRow& p, const std::vector<FeatureRow>& centers,
                   double* dist_out) {
  int best = 0;
  double best_d = sq_dist(p, centers[0]);
  for (int c = 1; c < static_cast<int>(centers.size()); ++c) {
    const double d = sq_dist(p, centers[c]);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  if (dist_out) *dist_out = best_d;
  return best;
}

LloydRun lloyd(const std::vector<FeatureRow>& rows,
               const std::vector<std::size_t>& order, int k, Rng rng,
               int max_iters) {
  const std::size_t n = rows.size();
  LloydRun run;
  run.centers.reserve(static_cast<std::size_t>(k));

  // Greedy farthest-point seeding from a random first point.
  run.centers.push_back(rows[order[rng.below(n)]]);
  std::vector<double> min_d(n);
  while (static_cast<int>(run.centers.size()) < k) {
    for (std::size_t i = 0; i < n; ++i) {
      nearest_center(rows[i], run.centers, &min_d[i]);
    }
    std::size_t far = order[0];
    for (std::size_t oi = 1; oi < n; ++oi) {
      if (min_d[order[oi]] > min_d[far]) far = order[oi];
    }
    run.centers.push_back(rows[far]);
  }

  run.assignment.assign(n, -1);
  std::vector<int> next(n);
  std::vector<double> dist(n);

  auto assign_all = [&]() {
    double w = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      next[i] = nearest_center(rows[i], run.centers, &dist[i]);
      w += dist[i];
    }
    return w;
  };

  double prev_w = std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < max_iters; ++iter) {
    const double w = assign_all();
    if (w > prev_w + 1e-9 * std::max(1.0, prev_w)) {
      throw NumericError("kmeans: objective increased across an iteration");
    }
    run.history.push_back(w);
    const bool unchanged = (run.assignment == next);
    run.assignment = next;
    run.objective = w;
    prev_w = w;
    if (unchanged) break;

    std::vector<FeatureRow> sums(static_cast<std::size_t>(k), FeatureRow{});
    std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto c = static_cast<std::size_t>(run.assignment[i]);
      counts[c] += 1;
      for (int d = 0; d < 3; ++d) sums[c][d] += rows[i][d];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] == 0) {
        // Re-seed the emptied cluster with the point farthest from its center.
        std::size_t far = order[0];
        double far_d = -1.0;
        for (std::size_t oi = 0; oi < n; ++oi) {
          const std::size_t i = order[oi];
          const double d =
              sq_dist(rows[i], run.centers[static_cast<std::size_t>(run.assignment[i])]);
          if (d > far_d) {
            far_d = d;
            far = i;
          }
        }
        run.centers[static_cast<std::size_t>(c)] = rows[far];
      } else {
        for (int d = 0; d < 3; ++d) {
          run.centers[static_cast<std::size_t>(c)][d] =
              sums[static_cast<std::size_t>(c)][d] /
              static_cast<double>(counts[static_cast<std::size_t>(c)]);
        }
      }
    }
  }
  // Final pass so the assignment matches the last center update.
  const double w = assign_all();
  run.history.push_back(w);
  run.assignment = next;
  run.objective = w;
  return run;
}

}  // namespace

DriverFeatures compute_features(const SpatialProfile& profile) {
  if (profile.size() == 0) {
    throw ValidationError("compute_features: empty profile for " + profile.vehicle_id);
  }
  DriverFeatures f;
  f.vehicle_id = profile.vehicle_id;
  double a_min = profile.a_at[0], a_max = profile.a_at[0];
  double v_sum = 0.0, a_sum = 0.0;
  for (std::size_t i = 0; i < profile.size(); ++i) {
    a_min = std::min(a_min, profile.a_at[i]);
    a_max = std::max(a_max, profile.a_at[i]);
    v_sum += profile.v_at[i];
    a_sum += profile.a_at[i];
  }
  f.accel_range = a_max - a_min;
  f.avg_speed = v_sum / static_cast<double>(profile.size());
  f.avg_accel = a_sum / static_cast<double>(profile.size());
  return f;
}

ClusteringResult kmeans(const std::vector<DriverFeatures>& features, int k,
                        Rng rng, int restarts, int max_iters) {
  const std::size_t n = features.size();
  if (k < 1) throw ValidationError("kmeans: k must be >= 1");
  if (n < static_cast<std::size_t>(k)) {
    throw ValidationError("kmeans: n=" + std::to_string(n) + " < k=" + std::to_string(k));
  }
  if (restarts < 1) throw ValidationError("kmeans: restarts must be >= 1");

  const Standardized std_feats = standardize(features);
  const auto order = canonical_order(std_feats.rows);

  ClusteringResult result;
  result.k = k;
  LloydRun best;
  bool have_best = false;
  for (int r = 0; r < restarts; ++r) {
    LloydRun run = lloyd(std_feats.rows, order, k, rng.fork(static_cast<std::uint64_t>(r)),
                         max_iters);
    result.objective_history.push_back(run.history);
    if (!have_best || run.objective < best.objective) {
      best = std::move(run);
      have_best = true;
    }
  }

  // Canonical cluster order: centers sorted lexicographically.
  std::vector<int> center_order(static_cast<std::size_t>(k));
  std::iota(center_order.begin(), center_order.end(), 0);
  std::sort(center_order.begin(), center_order.end(), [&](int a, int b) {
    return best.centers[static_cast<std::size_t>(a)] <
           best.centers[static_cast<std::size_t>(b)];
  });
  std::vector<int> remap(static_cast<std::size_t>(k));
  for (int c = 0; c < k; ++c) remap[static_cast<std::size_t>(center_order[static_cast<std::size_t>(c)])] = c;

  result.centers_std.resize(static_cast<std::size_t>(k));
  result.centers.resize(static_cast<std::size_t>(k));
  for (int c = 0; c < k; ++c) {
    const auto& cs = best.centers[static_cast<std::size_t>(center_order[static_cast<std::size_t>(c)])];
    result.centers_std[static_cast<std::size_t>(c)] = cs;
    for (int d = 0; d < 3; ++d) {
      result.centers[static_cast<std::size_t>(c)][d] =
          cs[d] * std_feats.std[d] + std_feats.mean[d];
    }
  }
  result.assignment.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    result.assignment[i] = remap[static_cast<std::size_t>(best.assignment[i])];
  }
  result.objective = best.objective;

  double l = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    l += std::sqrt(sq_dist(std_feats.rows[i],
                           result.centers_std[static_cast<std::size_t>(result.assignment[i])]));
  }
  result.mean_min_distance = l / static_cast<double>(n);
  return result;
}

std::vector<KDiagnostics> sweep_diagnostics(
    const std::vector<std::pair<int, double>>& l_per_k, std::size_t n,
    bool literal_bic) {
  if (l_per_k.empty()) throw ValidationError("sweep_diagnostics: empty sweep");
  double l_min = l_per_k.front().second;
  double l_max = l_min;
  for (const auto& [k, l] : l_per_k) {
    l_min = std::min(l_min, l);
    l_max = std::max(l_max, l);
  }
  const bool degenerate = (l_max - l_min) < 1e-12;

  std::vector<KDiagnostics> out;
  out.reserve(l_per_k.size());
  for (const auto& [k, l] : l_per_k) {
    KDiagnostics d;
    d.k = k;
    d.mean_min_distance = l;
    if (degenerate) {
      d.ln_l_prime = 0.0;
    } else {
      const double l_prime =
          (l - l_min) / (l_max - l_min) * (std::numbers::e - 1.0) + 1.0;
      d.ln_l_prime = std::log(l_prime);
    }
    d.aic = 2.0 * k + 2.0 * 10.0 * d.ln_l_prime;
    d.bic = literal_bic
                ? k * std::log(static_cast<double>(n)) * 10.0 * d.ln_l_prime
                : k * std::log(static_cast<double>(n)) + 2.0 * 10.0 * d.ln_l_prime;
    out.push_back(d);
  }
  return out;
}

SelectionResult select_k(const std::vector<DriverFeatures>& features,
                         int k_min, int k_max, Rng rng, int restarts,
                         bool literal_bic) {
  if (k_min < 1 || k_max < k_min) {
    throw ValidationError("select_k: invalid k range");
  }
  if (static_cast<std::size_t>(k_max) > features.size()) {
    throw ValidationError("select_k: k_max exceeds the number of points");
  }

  const int n_k = k_max - k_min + 1;
  std::vector<ClusteringResult> runs(static_cast<std::size_t>(n_k));
  ExceptionCollector exc;
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n_k; ++i) {
    exc.run([&, i] {
      const int k = k_min + i;
      runs[static_cast<std::size_t>(i)] =
          kmeans(features, k, rng.fork("k").fork(static_cast<std::uint64_t>(k)), restarts);
    });
  }
  exc.rethrow();

  std::vector<std::pair<int, double>> l_per_k;
  for (int i = 0; i < n_k; ++i) {
    l_per_k.emplace_back(k_min + i, runs[static_cast<std::size_t>(i)].mean_min_distance);
  }

  SelectionResult sel;
  sel.per_k = sweep_diagnostics(l_per_k, features.size(), literal_bic);

  int best_i = 0;
  for (int i = 1; i < n_k; ++i) {
    if (sel.per_k[static_cast<std::size_t>(i)].aic <
        sel.per_k[static_cast<std::size_t>(best_i)].aic) {
      best_i = i;
    }
  }
  sel.best_k = k_min + best_i;
  sel.best = std::move(runs[static_cast<std::size_t>(best_i)]);
  return sel;
}

void label_clusters(ClusteringResult& result) {
  result.labels.clear();
  if (result.k != 3) return;

  std::vector<int> order = {0, 1, 2};
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const auto& ca = result.centers[static_cast<std::size_t>(a)];
    const auto& cb = result.centers[static_cast<std::size_t>(b)];
    if (ca[1] != cb[1]) return ca[1] < cb[1];  // avg_speed ascending
    return ca[2] < cb[2];                      // tie: avg_accel ascending
  });

  std::vector<int> remap(3);
  for (int c = 0; c < 3; ++c) remap[static_cast<std::size_t>(order[static_cast<std::size_t>(c)])] = c;

  const auto centers = result.centers;
  const auto centers_std = result.centers_std;
  for (int c = 0; c < 3; ++c) {
    result.centers[static_cast<std::size_t>(c)] = centers[static_cast<std::size_t>(order[static_cast<std::size_t>(c)])];
    result.centers_std[static_cast<std::size_t>(c)] =
        centers_std[static_cast<std::size_t>(order[static_cast<std::size_t>(c)])];
  }
  for (auto& a : result.assignment) a = remap[static_cast<std::size_t>(a)];
  result.labels = {"conservative", "moderate", "aggressive"};
}

}  // namespace acp
