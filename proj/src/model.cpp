#include "accelpred/model.hpp"

#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "accelpred/common.hpp"
#include "accelpred/model_impl.hpp"

namespace acp {

using nlohmann::json;

ModelKind parse_model_kind(const std::string& name) {
  if (name == "seq2seq") return ModelKind::seq2seq;
  if (name == "bilstm") return ModelKind::bilstm;
  if (name == "rnn") return ModelKind::rnn;
  if (name == "ann") return ModelKind::ann;
  if (name == "cnn") return ModelKind::cnn;
  throw ValidationError("unknown model kind '" + name + "'");
}

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::seq2seq: return "seq2seq";
    case ModelKind::bilstm: return "bilstm";
    case ModelKind::rnn: return "rnn";
    case ModelKind::ann: return "ann";
    case ModelKind::cnn: return "cnn";
  }
  return "?";
}

void ModelConfig::validate() const {
  if (history_len < 1) throw ValidationError("model config: history_len must be >= 1");
  if (horizon < 1) throw ValidationError("model config: horizon must be >= 1");
  if (hidden < 1 || attn_width < 1 || align_width < 1 || ann_hidden < 1 ||
      conv_channels < 1 || conv_kernel < 1) {
    throw ValidationError("model config: layer sizes must be >= 1");
  }
  if (dropout < 0.0 || dropout >= 1.0) {
    throw ValidationError("model config: dropout must be in [0, 1)");
  }
  if (teacher_forcing < 0.0 || teacher_forcing > 1.0) {
    throw ValidationError("model config: teacher_forcing must be in [0, 1]");
  }
  if (env_input && env_span == EnvSpan::prediction && horizon > history_len) {
    throw ValidationError(
        "model config: prediction-span env rows do not fit a history of " +
        std::to_string(history_len));
  }
  if (kind == ModelKind::cnn && history_len < 2 * (conv_kernel - 1) + 1) {
    throw ValidationError("model config: history too short for the conv stack");
  }
}

Model::Model(const ModelConfig& config, const Normalizer& norm)
    : config_(config), norm_(norm) {
  config_.validate();
}

void Model::register_params() {
  params_.clear();
  grads_.clear();
  names_.clear();
  if (config_.env_input) align_.collect(params_, grads_, names_, "align");
  collect(params_, grads_, names_);
}

void Model::zero_grads() {
  for (Tensor* g : grads_) g->fill(0.0);
}

void Model::validate_task(const PredictionTask& task, bool inference) const {
  if (static_cast<int>(task.history.size()) != config_.history_len) {
    throw ValidationError("task history length " + std::to_string(task.history.size()) +
                          " does not match configured " +
                          std::to_string(config_.history_len));
  }
  if (inference) {
    if (task.horizon < 1 || task.horizon > config_.horizon) {
      throw ValidationError("task horizon " + std::to_string(task.horizon) +
                            " exceeds trained horizon " + std::to_string(config_.horizon));
    }
  } else if (task.horizon != config_.horizon) {
    throw ValidationError("training task horizon must equal the configured horizon");
  }
  if (config_.env_input) {
    const std::size_t want = config_.env_span == EnvSpan::prediction
                                 ? static_cast<std::size_t>(task.horizon)
                                 : static_cast<std::size_t>(config_.history_len);
    if (task.env.size() != want) {
      throw ValidationError("task env rows " + std::to_string(task.env.size()) +
                            ", expected " + std::to_string(want));
    }
  }
}

std::vector<EnvRow> Model::normalized_env(const PredictionTask& task) const {
  std::vector<EnvRow> rows;
  if (!config_.env_input) return rows;
  rows.resize(task.env.size());
  for (std::size_t r = 0; r < task.env.size(); ++r) {
    for (int c = 0; c < kEnvChannels; ++c) {
      rows[r][c] = (task.env[r][c] - norm_.env_mean[c]) / norm_.env_std[c];
    }
  }
  return rows;
}

std::size_t Model::env_row_offset(std::size_t env_count) const {
  return static_cast<std::size_t>(config_.history_len) - env_count;
}

Tensor Model::assemble_input(const PredictionTask& task) const {
  validate_task(task, /*inference=*/true);
  const auto t_len = static_cast<std::size_t>(config_.history_len);
  const auto width = static_cast<std::size_t>(config_.input_width());
  Tensor input = Tensor::zeros({t_len, width});
  for (std::size_t t = 0; t < t_len; ++t) {
    input.at(t, 0) = (task.history[t][0] - norm_.hist_mean[0]) / norm_.hist_std[0];
    input.at(t, 1) = (task.history[t][1] - norm_.hist_mean[1]) / norm_.hist_std[1];
  }
  if (config_.env_input) {
    const auto env_norm = normalized_env(task);
    const std::size_t offset = env_row_offset(env_norm.size());
    for (std::size_t r = 0; r < env_norm.size(); ++r) {
      linear_forward(align_, env_norm[r].data(), input.row(offset + r) + 2);
    }
  }
  check_finite(input, "assemble_input");
  return input;
}

std::vector<double> Model::normalize_target(std::span<const double> target) const {
  std::vector<double> out(target.size());
  for (std::size_t i = 0; i < target.size(); ++i) {
    out[i] = (target[i] - norm_.target_mean) / norm_.target_std;
  }
  return out;
}

std::vector<double> Model::predict(const PredictionTask& task) const {
  validate_task(task, /*inference=*/true);
  ForwardPlan plan;  // inference: no dropout, no teacher forcing
  std::vector<double> y = forward_normalized(task, {}, plan);
  y.resize(static_cast<std::size_t>(task.horizon));
  for (auto& v : y) v = v * norm_.target_std + norm_.target_mean;
  check_finite(std::span<const double>(y), "predict");
  return y;
}

std::unique_ptr<Model> build_model(const ModelConfig& config, const Normalizer& norm) {
  config.validate();
  Rng init = Rng(config.init_seed).fork("init");
  switch (config.kind) {
    case ModelKind::seq2seq:
      return std::make_unique<Seq2SeqModel>(config, norm, init);
    case ModelKind::rnn:
      return std::make_unique<RnnModel>(config, norm, init);
    case ModelKind::ann:
      return std::make_unique<AnnModel>(config, norm, init);
    case ModelKind::cnn:
      return std::make_unique<CnnModel>(config, norm, init);
    case ModelKind::bilstm:
      return std::make_unique<BiLstmModel>(config, norm, init);
  }
  throw ValidationError("build_model: unknown kind");
}

namespace {

constexpr char kMagic[8] = {'A', 'C', 'P', 'M', 'O', 'D', 'L', '\0'};
constexpr std::uint32_t kFormatVersion = 1;

void write_u32(std::ofstream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

void write_u64(std::ofstream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint32_t read_u32(std::ifstream& in, const std::string& path) {
  std::uint32_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(v))) {
    throw IoError(path + ": truncated model file");
  }
  return v;
}

std::uint64_t read_u64(std::ifstream& in, const std::string& path) {
  std::uint64_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(v))) {
    throw IoError(path + ": truncated model file");
  }
  return v;
}

json config_to_json(const ModelConfig& c, const Normalizer& n) {
  json j;
  j["kind"] = to_string(c.kind);
  j["history_len"] = c.history_len;
  j["horizon"] = c.horizon;
  j["env_input"] = c.env_input;
  j["env_span"] = c.env_span == EnvSpan::prediction ? "prediction" : "history";
  j["hidden"] = c.hidden;
  j["attn_width"] = c.attn_width;
  j["align_width"] = c.align_width;
  j["ann_hidden"] = c.ann_hidden;
  j["conv_channels"] = c.conv_channels;
  j["conv_kernel"] = c.conv_kernel;
  j["dropout"] = c.dropout;
  j["teacher_forcing"] = c.teacher_forcing;
  j["init_seed"] = c.init_seed;
  j["norm"] = {{"hist_mean", n.hist_mean}, {"hist_std", n.hist_std},
               {"env_mean", n.env_mean},   {"env_std", n.env_std},
               {"target_mean", n.target_mean}, {"target_std", n.target_std}};
  return j;
}

void config_from_json(const json& j, ModelConfig& c, Normalizer& n) {
  c.kind = parse_model_kind(j.at("kind").get<std::string>());
  c.history_len = j.at("history_len").get<int>();
  c.horizon = j.at("horizon").get<int>();
  c.env_input = j.at("env_input").get<bool>();
  c.env_span = j.at("env_span").get<std::string>() == "history" ? EnvSpan::history
                                                                : EnvSpan::prediction;
  c.hidden = j.at("hidden").get<int>();
  c.attn_width = j.at("attn_width").get<int>();
  c.align_width = j.at("align_width").get<int>();
  c.ann_hidden = j.at("ann_hidden").get<int>();
  c.conv_channels = j.at("conv_channels").get<int>();
  c.conv_kernel = j.at("conv_kernel").get<int>();
  c.dropout = j.at("dropout").get<double>();
  c.teacher_forcing = j.at("teacher_forcing").get<double>();
  c.init_seed = j.at("init_seed").get<std::uint64_t>();
  const json& jn = j.at("norm");
  n.hist_mean = jn.at("hist_mean").get<std::array<double, 2>>();
  n.hist_std = jn.at("hist_std").get<std::array<double, 2>>();
  n.env_mean = jn.at("env_mean").get<std::array<double, kEnvChannels>>();
  n.env_std = jn.at("env_std").get<std::array<double, kEnvChannels>>();
  n.target_mean = jn.at("target_mean").get<double>();
  n.target_std = jn.at("target_std").get<double>();
}

}  // namespace

void Model::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out.write(kMagic, sizeof(kMagic));
  write_u32(out, kFormatVersion);

  const std::string cfg = config_to_json(config_, norm_).dump();
  write_u32(out, static_cast<std::uint32_t>(cfg.size()));
  out.write(cfg.data(), static_cast<std::streamsize>(cfg.size()));

  write_u32(out, static_cast<std::uint32_t>(params_.size()));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const std::string& name = names_[i];
    write_u32(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    const Tensor& t = *params_[i];
    write_u32(out, static_cast<std::uint32_t>(t.shape.size()));
    for (auto d : t.shape) write_u64(out, d);
    out.write(reinterpret_cast<const char*>(t.data.data()),
              static_cast<std::streamsize>(t.data.size() * sizeof(double)));
  }
  if (!out) throw IoError("failed writing " + path);
}

std::unique_ptr<Model> Model::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path + " for reading");
  char magic[8];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw IoError(path + ": not a model file");
  }
  const std::uint32_t version = read_u32(in, path);
  if (version != kFormatVersion) {
    throw IoError(path + ": unsupported format version " + std::to_string(version));
  }

  const std::uint32_t cfg_len = read_u32(in, path);
  std::string cfg(cfg_len, '\0');
  if (!in.read(cfg.data(), cfg_len)) throw IoError(path + ": truncated config block");
  ModelConfig config;
  Normalizer norm;
  try {
    config_from_json(json::parse(cfg), config, norm);
  } catch (const json::exception& e) {
    throw IoError(path + ": bad config block: " + e.what());
  }

  auto model = build_model(config, norm);
  const std::uint32_t n_tensors = read_u32(in, path);
  if (n_tensors != model->params_.size()) {
    throw IoError(path + ": tensor count " + std::to_string(n_tensors) +
                  " does not match the architecture");
  }
  for (std::uint32_t i = 0; i < n_tensors; ++i) {
    const std::uint32_t name_len = read_u32(in, path);
    std::string name(name_len, '\0');
    if (!in.read(name.data(), name_len)) throw IoError(path + ": truncated tensor name");
    if (name != model->names_[i]) {
      throw IoError(path + ": tensor '" + name + "' out of order, expected '" +
                    model->names_[i] + "'");
    }
    const std::uint32_t ndim = read_u32(in, path);
    std::vector<std::size_t> shape(ndim);
    for (auto& d : shape) d = read_u64(in, path);
    Tensor& t = *model->params_[i];
    if (shape != t.shape) throw IoError(path + ": tensor '" + name + "' shape mismatch");
    if (!in.read(reinterpret_cast<char*>(t.data.data()),
                 static_cast<std::streamsize>(t.data.size() * sizeof(double)))) {
      throw IoError(path + ": truncated tensor data");
    }
  }
  return model;
}

}  // namespace acp
