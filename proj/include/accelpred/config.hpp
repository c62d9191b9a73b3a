#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "accelpred/model.hpp"
#include "accelpred/synth.hpp"
#include "accelpred/trainer.hpp"

namespace acp {

// Every knob the pipeline exposes, one section per stage. Values here are
// the documented defaults; a config file overrides them key by key.
struct RunConfig {
  // [run]
  std::uint64_t seed = 42;
  int jobs = 0;  // 0 = OpenMP default
  std::string out_dir = "out";

  // [scenario]
  ScenarioSpec scenario{.n_vehicles = 300, .duration = 2400.0};

  // [archetype.<label>] x3; defaults are the published style statistics
  std::vector<ArchetypeSpec> archetypes = default_archetypes();

  // [env]
  double window_min = 15.0;
  std::uint32_t min_support = 5;
  EnvSpan env_span = EnvSpan::prediction;

  // [dataset]
  int history_m = 100;
  int anchor_stride_m = 50;
  double split_train = 0.7;
  double split_test = 0.2;
  double split_val = 0.1;

  // [clustering]
  int k_min = 1;
  int k_max = 10;
  int restarts = 10;
  int max_iters = 300;
  bool literal_bic = false;

  // [model]
  int hidden = 32;
  int attn_width = 16;
  int align_width = 2;
  int ann_hidden = 64;
  int conv_channels = 16;
  int conv_kernel = 5;
  double dropout = 0.2;
  double teacher_forcing = 0.5;
  double lr = 2e-3;
  int batch = 8;
  int max_steps = 250;
  int eval_every = 40;
  int patience = 4;
  std::vector<int> horizons = {10, 30, 50};

  // [eval]
  std::vector<std::string> families = {"seq2seq"};
  int grid_seeds = 2;
  bool clustered = true;
  bool unclustered = true;
  bool env_on = true;
  bool env_off = true;
  int trace_vehicles = 3;
  std::vector<double> sweep_windows;  // minutes; empty disables the sweep
  int sweep_seeds = 3;

  void validate() const;
  int max_horizon() const;
  ModelConfig model_config(ModelKind kind, int horizon, bool env,
                           std::uint64_t init_seed) const;
  TrainConfig train_config() const;
};

// INI-style file: [section] headers, `key = value` pairs, # or ; comments.
// Unknown keys and malformed lines are reported with their line number.
RunConfig parse_config_text(const std::string& text, const std::string& origin);
RunConfig load_config_file(const std::string& path);

// The full resolved configuration, parseable by parse_config_text.
std::string to_ini(const RunConfig& config);

}  // namespace acp
