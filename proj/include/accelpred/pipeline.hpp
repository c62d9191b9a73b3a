#pragma once

#include <map>
#include <string>
#include <vector>

#include "accelpred/clustering.hpp"
#include "accelpred/config.hpp"
#include "accelpred/dataset.hpp"
#include "accelpred/env.hpp"
#include "accelpred/synth.hpp"
#include "accelpred/trajectory.hpp"

namespace acp {

// Artifact names under the run's output directory.
namespace artifacts {
inline constexpr const char* kTrajectories = "trajectories.csv";
inline constexpr const char* kLabels = "labels.csv";
inline constexpr const char* kProfiles = "profiles.csv";
inline constexpr const char* kEnv = "env.csv";
inline constexpr const char* kAssignments = "assignments.csv";
inline constexpr const char* kKDiagnostics = "k_diagnostics.csv";
inline constexpr const char* kModelsDir = "models";
inline constexpr const char* kManifest = "models/manifest.json";
inline constexpr const char* kTraces = "traces.csv";
inline constexpr const char* kGrid = "grid.csv";
inline constexpr const char* kGridRaw = "grid_raw.csv";
inline constexpr const char* kSweep = "sweep.csv";
inline constexpr const char* kReport = "report.md";
}  // namespace artifacts

// Grid bounds of the section in integer meters.
long section_grid_first(const ScenarioSpec& scenario);
long section_grid_last(const ScenarioSpec& scenario);

// One env sequence per vehicle: the window ends at the vehicle's own entry
// time, so a vehicle never sees itself. OpenMP over vehicles.
std::vector<EnvSequence> per_vehicle_envs(const std::vector<SpatialProfile>& profiles,
                                          const RunConfig& config);

// Everything derived from one generated population.
struct Corpus {
  std::vector<SpatialProfile> profiles;
  std::vector<DriverFeatures> features;
  ClusteringResult clusters;        // k = 3, labeled
  std::vector<Sample> windows;      // cls-tagged (vehicle, anchor) samples
  std::map<std::string, Split> splits;
};

// Generate + resample + per-vehicle envs + k-means(3) + windows + splits,
// all derived from corpus_seed.
Corpus build_corpus(const RunConfig& config, std::uint64_t corpus_seed);

// Windows + splits from already-loaded profiles and class assignments
// (used by the file-driven CLI stages).
std::vector<Sample> corpus_windows(const std::vector<SpatialProfile>& profiles,
                                   const std::vector<EnvSequence>& envs,
                                   const std::vector<int>& cls_of_profile,
                                   const RunConfig& config);

// CLI stage entry points; each reads its upstream artifacts from
// config.out_dir, writes its own artifacts there, and writes
// config.<stage>.ini alongside them.
void run_generate(const RunConfig& config);
void run_preprocess(const RunConfig& config);
void run_features(const RunConfig& config);
int run_cluster(const RunConfig& config);  // returns the selected k
void run_train(const RunConfig& config);
void run_predict(const RunConfig& config);
void run_evaluate(const RunConfig& config);
void run_report(const RunConfig& config);
void run_pipeline(const RunConfig& config);

}  // namespace acp
