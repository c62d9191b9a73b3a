#pragma once

#include <array>
#include <string>
#include <vector>

#include "accelpred/rng.hpp"
#include "accelpred/trajectory.hpp"

namespace acp {

// Per-vehicle style features over the vehicle's spatial profile.
struct DriverFeatures {
  std::string vehicle_id;
  double accel_range = 0;  // max a - min a, m/s^2
  double avg_speed = 0;    // m/s
  double avg_accel = 0;    // m/s^2
};

DriverFeatures compute_features(const SpatialProfile& profile);

struct ClusteringResult {
  int k = 0;
  // Cluster order is canonical: centers sorted lexicographically in
  // standardized space (then relabeled by label_clusters for k == 3).
  std::vector<std::array<double, 3>> centers;      // original units
  std::vector<std::array<double, 3>> centers_std;  // standardized space
  std::vector<int> assignment;                     // per input row
  double objective = 0;          // W(C): sum of squared distances, standardized
  double mean_min_distance = 0;  // L: mean distance to the nearest center
  // W(C) after every assignment pass, one history per restart; non-increasing.
  std::vector<std::vector<double>> objective_history;
  // conservative / moderate / aggressive when k == 3, empty otherwise.
  std::vector<std::string> labels;
};

// Lloyd's algorithm on z-scored features with greedy farthest-point seeding,
// best of `restarts` seeded runs. Emptied clusters are re-seeded with the
// point farthest from its assigned center. Deterministic given rng, and
// invariant under reordering of the input rows.
ClusteringResult kmeans(const std::vector<DriverFeatures>& features, int k,
                        Rng rng, int restarts = 10, int max_iters = 300);

struct KDiagnostics {
  int k = 0;
  double mean_min_distance = 0;  // L
  double ln_l_prime = 0;         // ln of the sweep-normalized L
  double aic = 0;
  double bic = 0;
};

struct SelectionResult {
  int best_k = 0;
  std::vector<KDiagnostics> per_k;
  ClusteringResult best;
};

// The sweep normalization and both criteria from raw (k, L) pairs; exposed
// so the arithmetic can be checked against hand-computed tables. A
// degenerate sweep (all L equal) defines ln(L') = 0 everywhere.
std::vector<KDiagnostics> sweep_diagnostics(
    const std::vector<std::pair<int, double>>& l_per_k, std::size_t n,
    bool literal_bic = false);

// Sweep k over [k_min, k_max]; L normalized across the sweep to
// L' = (L - Lmin)/(Lmax - Lmin)*(e - 1) + 1 so ln(L') lies in [0, 1].
// AIC = 2k + 2*10*ln(L') and best_k minimizes it (ties -> smaller k).
// BIC defaults to k*ln(n) + 2*10*ln(L'); literal_bic instead reports the
// published multiplicative form k*ln(n)*10*ln(L') for audit.
SelectionResult select_k(const std::vector<DriverFeatures>& features,
                         int k_min, int k_max, Rng rng, int restarts = 10,
                         bool literal_bic = false);

// k == 3: order clusters by center avg_speed ascending (ties by avg_accel)
// and name them conservative / moderate / aggressive. Other k: no labels.
void label_clusters(ClusteringResult& result);

}  // namespace acp
