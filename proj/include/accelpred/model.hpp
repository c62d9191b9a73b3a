#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "accelpred/env.hpp"
#include "accelpred/layers.hpp"
#include "accelpred/rng.hpp"
#include "accelpred/tensor.hpp"

namespace acp {

enum class ModelKind { seq2seq, bilstm, rnn, ann, cnn };

ModelKind parse_model_kind(const std::string& name);
std::string to_string(ModelKind kind);

// Which span of positions the environmental rows describe.
enum class EnvSpan { prediction, history };

struct ModelConfig {
  ModelKind kind = ModelKind::seq2seq;
  int history_len = 100;  // m of per-meter history
  int horizon = 50;       // m predicted per pass
  bool env_input = true;
  EnvSpan env_span = EnvSpan::prediction;
  int hidden = 32;
  int attn_width = 16;
  int align_width = 2;   // env rows are mapped to this width, matching the
                         // individual sequence's feature count
  int ann_hidden = 64;
  int conv_channels = 16;
  int conv_kernel = 5;
  double dropout = 0.2;
  double teacher_forcing = 0.5;
  std::uint64_t init_seed = 0;

  int input_width() const { return 2 + (env_input ? align_width : 0); }
  int env_rows() const {
    return env_input ? (env_span == EnvSpan::prediction ? horizon : history_len) : 0;
  }
  void validate() const;
};

// Per-channel statistics fitted on the training split only.
struct Normalizer {
  std::array<double, 2> hist_mean{0.0, 0.0};
  std::array<double, 2> hist_std{1.0, 1.0};
  std::array<double, kEnvChannels> env_mean{};
  std::array<double, kEnvChannels> env_std{1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0};
  double target_mean = 0.0;
  double target_std = 1.0;
};

// One prediction request in raw units.
struct PredictionTask {
  std::vector<std::array<double, 2>> history;  // (v, a) per meter, oldest first
  std::vector<EnvRow> env;  // percentile rows; ignored by env-less models
  int horizon = 0;
};

// Stochastic choices of one training pass, drawn up front so that a forward
// pass is a pure function of (parameters, plan) — this is what makes the
// finite-difference gradient checks exact.
struct ForwardPlan {
  bool training = false;
  DropoutMask mask_a;
  DropoutMask mask_b;
  std::vector<std::uint8_t> teacher;  // per decoder step; seq2seq only
};

class Model {
 public:
  Model(const ModelConfig& config, const Normalizer& norm);
  virtual ~Model() = default;

  const ModelConfig& config() const { return config_; }
  const Normalizer& norm() const { return norm_; }
  void set_norm(const Normalizer& n) { norm_ = n; }

  // Encoder input sequence (history_len x input_width): normalized history
  // channels, with env rows normalized, passed through the alignment layer
  // and concatenated on the feature axis. Prediction-span env rows are
  // right-aligned against the end of the history; rows without env content
  // carry zeros in the env columns.
  Tensor assemble_input(const PredictionTask& task) const;

  virtual ForwardPlan make_plan(Rng& rng, bool training) const = 0;

  // Forward + backward for one sample; accumulates parameter gradients and
  // returns the MSE in normalized target space. `target` is raw m/s^2 of
  // length config().horizon.
  virtual double train_sample(const PredictionTask& task,
                              std::span<const double> target,
                              const ForwardPlan& plan) = 0;

  // De-normalized multi-step prediction, one encoder pass; task.horizon may
  // be at most the trained horizon.
  std::vector<double> predict(const PredictionTask& task) const;

  const std::vector<Tensor*>& parameters() { return params_; }
  const std::vector<Tensor*>& gradients() { return grads_; }
  const std::vector<std::string>& parameter_names() const { return names_; }
  void zero_grads();

  void save(const std::string& path) const;
  static std::unique_ptr<Model> load(const std::string& path);

 protected:
  // Normalized predictions of length config().horizon; plan may be inference.
  virtual std::vector<double> forward_normalized(
      const PredictionTask& task, std::span<const double> target_norm,
      const ForwardPlan& plan) const = 0;

  void register_params();  // calls collect() once, after member init
  virtual void collect(std::vector<Tensor*>& params, std::vector<Tensor*>& grads,
                       std::vector<std::string>& names) = 0;

  void validate_task(const PredictionTask& task, bool inference) const;
  std::vector<double> normalize_target(std::span<const double> target) const;
  // Env rows normalized per channel; empty when env input is off.
  std::vector<EnvRow> normalized_env(const PredictionTask& task) const;
  // First input row carrying env content (env rows are right-aligned).
  std::size_t env_row_offset(std::size_t env_count) const;

  ModelConfig config_;
  Normalizer norm_;
  LinearParams align_;  // env alignment; present on every env-enabled model

 private:
  std::vector<Tensor*> params_;
  std::vector<Tensor*> grads_;
  std::vector<std::string> names_;
};

// Builds the configured architecture (the attention Seq2Seq or one of the
// rnn/ann/cnn/bilstm baselines) with parameters drawn from config.init_seed.
std::unique_ptr<Model> build_model(const ModelConfig& config, const Normalizer& norm);

}  // namespace acp
