#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "accelpred/env.hpp"
#include "accelpred/model.hpp"
#include "accelpred/rng.hpp"
#include "accelpred/trajectory.hpp"

namespace acp {

// One (vehicle, anchor) window holding enough history, env rows and target
// values for the largest configured horizon; shorter-horizon models consume
// prefixes.
struct Sample {
  std::string vehicle_id;
  int cls = -1;  // cluster index, -1 when unclassified
  long anchor = 0;
  std::vector<std::array<double, 2>> history;
  std::vector<EnvRow> env;
  std::vector<double> target;
};

enum class Split { train, test, validation };

struct Dataset {
  std::vector<Sample> samples;
  std::vector<std::size_t> train_idx;
  std::vector<std::size_t> test_idx;
  std::vector<std::size_t> val_idx;
};

struct WindowParams {
  int history_len = 100;
  int max_horizon = 50;
  int anchor_stride = 1;
  EnvSpan env_span = EnvSpan::prediction;
};

// Windows for one vehicle at anchors stepped by anchor_stride; anchors whose
// history/target coverage or env span is incomplete are skipped.
std::vector<Sample> build_windows(const SpatialProfile& profile,
                                  const EnvSequence& env, const WindowParams& params,
                                  int cls);

// Per-vehicle 70/20/10-style assignment, shuffled independently within each
// class so the pooled splits contain exactly the per-class splits.
std::map<std::string, Split> assign_splits(
    const std::vector<std::pair<std::string, int>>& vehicles, double train_frac,
    double test_frac, double val_frac, Rng rng);

// View of the windows restricted to one class (cls_filter >= 0) or pooled
// (cls_filter == -1), with index lists per split.
Dataset make_dataset(std::vector<Sample> samples,
                     const std::map<std::string, Split>& splits, int cls_filter);

// Channel statistics over the training split only.
Normalizer fit_normalizer(const Dataset& data);

PredictionTask task_for(const Sample& sample, const ModelConfig& config);
std::span<const double> target_for(const Sample& sample, int horizon);

}  // namespace acp
