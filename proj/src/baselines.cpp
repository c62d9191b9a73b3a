#include <algorithm>

#include "accelpred/common.hpp"
#include "accelpred/model_impl.hpp"

namespace acp {
namespace {

// Gradient of the alignment layer from the assembled-input gradient.
void align_backward_rows(LinearParams& align, const std::vector<EnvRow>& env_norm,
                         const Tensor& dinput, std::size_t offset) {
  for (std::size_t r = 0; r < env_norm.size(); ++r) {
    linear_backward(align, env_norm[r].data(),
                    const_cast<Tensor&>(dinput).row(offset + r) + 2, nullptr);
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// RNN baseline

struct RnnModel::Trace {
  std::vector<EnvRow> env_norm;
  Tensor input;
  RnnSeqCache rnn;
  std::vector<double> h_dropped;
  std::vector<double> y_out;
};

RnnModel::RnnModel(const ModelConfig& config, const Normalizer& norm, Rng init)
    : Model(config, norm) {
  if (config_.env_input) {
    align_.init(static_cast<std::size_t>(config_.align_width), kEnvChannels, init);
  }
  const auto h = static_cast<std::size_t>(config_.hidden);
  rnn_.init(h, static_cast<std::size_t>(config_.input_width()), init);
  head_.init(static_cast<std::size_t>(config_.horizon), h, init);
  register_params();
}

void RnnModel::collect(std::vector<Tensor*>& params, std::vector<Tensor*>& grads,
                       std::vector<std::string>& names) {
  rnn_.collect(params, grads, names, "rnn");
  head_.collect(params, grads, names, "head");
}

ForwardPlan RnnModel::make_plan(Rng& rng, bool training) const {
  ForwardPlan plan;
  plan.training = training;
  plan.mask_a = make_dropout_mask(static_cast<std::size_t>(config_.hidden),
                                  config_.dropout, training, rng);
  return plan;
}

std::vector<double> RnnModel::forward(const PredictionTask& task,
                                      const ForwardPlan& plan, Trace* trace) const {
  Trace local;
  Trace& tr = trace ? *trace : local;
  tr.env_norm = normalized_env(task);
  tr.input = assemble_input(task);
  rnn_seq_forward(rnn_, tr.input, tr.rnn);

  const auto h = static_cast<std::size_t>(config_.hidden);
  const std::size_t t_last = tr.input.shape[0] - 1;
  tr.h_dropped.assign(h, 0.0);
  dropout_forward(plan.mask_a, std::span<const double>(tr.rnn.h.row(t_last), h),
                  tr.h_dropped);

  tr.y_out.assign(static_cast<std::size_t>(config_.horizon), 0.0);
  linear_forward(head_, tr.h_dropped.data(), tr.y_out.data());
  check_finite(std::span<const double>(tr.y_out), "rnn forward");
  return tr.y_out;
}

std::vector<double> RnnModel::forward_normalized(const PredictionTask& task,
                                                 std::span<const double>,
                                                 const ForwardPlan& plan) const {
  return forward(task, plan, nullptr);
}

double RnnModel::train_sample(const PredictionTask& task, std::span<const double> target,
                              const ForwardPlan& plan) {
  validate_task(task, /*inference=*/false);
  const auto target_norm = normalize_target(target);
  Trace tr;
  const auto pred = forward(task, plan, &tr);

  std::vector<double> dpred(pred.size());
  const double loss = mse_loss(pred, target_norm, dpred);

  const auto h = static_cast<std::size_t>(config_.hidden);
  std::vector<double> dh_dropped(h, 0.0), dh_final(h, 0.0);
  linear_backward(head_, tr.h_dropped.data(), dpred.data(), dh_dropped.data());
  dropout_backward(plan.mask_a, dh_dropped, dh_final);

  const auto t_len = static_cast<std::size_t>(config_.history_len);
  Tensor dh_seq = Tensor::zeros({t_len, h});
  Tensor dinput = Tensor::zeros({t_len, static_cast<std::size_t>(config_.input_width())});
  rnn_seq_backward(rnn_, tr.rnn, dh_seq, dh_final.data(), dinput);

  if (config_.env_input) {
    align_backward_rows(align_, tr.env_norm, dinput, env_row_offset(tr.env_norm.size()));
  }
  return loss;
}

// ---------------------------------------------------------------------------
// ANN baseline

struct AnnModel::Trace {
  std::vector<EnvRow> env_norm;
  Tensor input;
  std::vector<double> flat;
  std::vector<double> t1, d1;  // tanh then dropout, layer 1
  std::vector<double> t2, d2;
  std::vector<double> y_out;
};

AnnModel::AnnModel(const ModelConfig& config, const Normalizer& norm, Rng init)
    : Model(config, norm) {
  if (config_.env_input) {
    align_.init(static_cast<std::size_t>(config_.align_width), kEnvChannels, init);
  }
  const auto flat = static_cast<std::size_t>(config_.history_len * config_.input_width());
  const auto hidden = static_cast<std::size_t>(config_.ann_hidden);
  fc1_.init(hidden, flat, init);
  fc2_.init(hidden, hidden, init);
  head_.init(static_cast<std::size_t>(config_.horizon), hidden, init);
  register_params();
}

void AnnModel::collect(std::vector<Tensor*>& params, std::vector<Tensor*>& grads,
                       std::vector<std::string>& names) {
  fc1_.collect(params, grads, names, "fc1");
  fc2_.collect(params, grads, names, "fc2");
  head_.collect(params, grads, names, "head");
}

ForwardPlan AnnModel::make_plan(Rng& rng, bool training) const {
  ForwardPlan plan;
  plan.training = training;
  const auto hidden = static_cast<std::size_t>(config_.ann_hidden);
  plan.mask_a = make_dropout_mask(hidden, config_.dropout, training, rng);
  plan.mask_b = make_dropout_mask(hidden, config_.dropout, training, rng);
  return plan;
}

std::vector<double> AnnModel::forward(const PredictionTask& task,
                                      const ForwardPlan& plan, Trace* trace) const {
  Trace local;
  Trace& tr = trace ? *trace : local;
  tr.env_norm = normalized_env(task);
  tr.input = assemble_input(task);
  tr.flat = tr.input.data;

  const auto hidden = static_cast<std::size_t>(config_.ann_hidden);
  std::vector<double> pre(hidden);
  linear_forward(fc1_, tr.flat.data(), pre.data());
  tr.t1.assign(hidden, 0.0);
  tanh_forward(pre, tr.t1);
  tr.d1.assign(hidden, 0.0);
  dropout_forward(plan.mask_a, tr.t1, tr.d1);

  linear_forward(fc2_, tr.d1.data(), pre.data());
  tr.t2.assign(hidden, 0.0);
  tanh_forward(pre, tr.t2);
  tr.d2.assign(hidden, 0.0);
  dropout_forward(plan.mask_b, tr.t2, tr.d2);

  tr.y_out.assign(static_cast<std::size_t>(config_.horizon), 0.0);
  linear_forward(head_, tr.d2.data(), tr.y_out.data());
  check_finite(std::span<const double>(tr.y_out), "ann forward");
  return tr.y_out;
}

std::vector<double> AnnModel::forward_normalized(const PredictionTask& task,
                                                 std::span<const double>,
                                                 const ForwardPlan& plan) const {
  return forward(task, plan, nullptr);
}

double AnnModel::train_sample(const PredictionTask& task, std::span<const double> target,
                              const ForwardPlan& plan) {
  validate_task(task, /*inference=*/false);
  const auto target_norm = normalize_target(target);
  Trace tr;
  const auto pred = forward(task, plan, &tr);

  std::vector<double> dpred(pred.size());
  const double loss = mse_loss(pred, target_norm, dpred);

  const auto hidden = static_cast<std::size_t>(config_.ann_hidden);
  std::vector<double> dd2(hidden, 0.0), dt2(hidden, 0.0), da2(hidden, 0.0);
  linear_backward(head_, tr.d2.data(), dpred.data(), dd2.data());
  dropout_backward(plan.mask_b, dd2, dt2);
  tanh_backward(tr.t2, dt2, da2);

  std::vector<double> dd1(hidden, 0.0), dt1(hidden, 0.0), da1(hidden, 0.0);
  linear_backward(fc2_, tr.d1.data(), da2.data(), dd1.data());
  dropout_backward(plan.mask_a, dd1, dt1);
  tanh_backward(tr.t1, dt1, da1);

  Tensor dinput = Tensor::zeros({static_cast<std::size_t>(config_.history_len),
                                 static_cast<std::size_t>(config_.input_width())});
  linear_backward(fc1_, tr.flat.data(), da1.data(), dinput.data.data());

  if (config_.env_input) {
    align_backward_rows(align_, tr.env_norm, dinput, env_row_offset(tr.env_norm.size()));
  }
  return loss;
}

// ---------------------------------------------------------------------------
// CNN baseline

struct CnnModel::Trace {
  std::vector<EnvRow> env_norm;
  Tensor input;
  Tensor pre1, t1;
  Tensor pre2, t2;
  std::vector<double> dropped;
  std::vector<double> y_out;
};

std::size_t CnnModel::flat_size() const {
  const auto t_out = static_cast<std::size_t>(config_.history_len) -
                     2 * (static_cast<std::size_t>(config_.conv_kernel) - 1);
  return t_out * static_cast<std::size_t>(config_.conv_channels);
}

CnnModel::CnnModel(const ModelConfig& config, const Normalizer& norm, Rng init)
    : Model(config, norm) {
  if (config_.env_input) {
    align_.init(static_cast<std::size_t>(config_.align_width), kEnvChannels, init);
  }
  const auto f = static_cast<std::size_t>(config_.conv_channels);
  const auto k = static_cast<std::size_t>(config_.conv_kernel);
  conv1_.init(f, static_cast<std::size_t>(config_.input_width()), k, init);
  conv2_.init(f, f, k, init);
  head_.init(static_cast<std::size_t>(config_.horizon), flat_size(), init);
  register_params();
}

void CnnModel::collect(std::vector<Tensor*>& params, std::vector<Tensor*>& grads,
                       std::vector<std::string>& names) {
  conv1_.collect(params, grads, names, "conv1");
  conv2_.collect(params, grads, names, "conv2");
  head_.collect(params, grads, names, "head");
}

ForwardPlan CnnModel::make_plan(Rng& rng, bool training) const {
  ForwardPlan plan;
  plan.training = training;
  plan.mask_a = make_dropout_mask(flat_size(), config_.dropout, training, rng);
  return plan;
}

std::vector<double> CnnModel::forward(const PredictionTask& task,
                                      const ForwardPlan& plan, Trace* trace) const {
  Trace local;
  Trace& tr = trace ? *trace : local;
  tr.env_norm = normalized_env(task);
  tr.input = assemble_input(task);

  conv1d_forward(conv1_, tr.input, tr.pre1);
  tr.t1 = Tensor::zeros({tr.pre1.shape[0], tr.pre1.shape[1]});
  tanh_forward(std::span<const double>(tr.pre1.data), std::span<double>(tr.t1.data));

  conv1d_forward(conv2_, tr.t1, tr.pre2);
  tr.t2 = Tensor::zeros({tr.pre2.shape[0], tr.pre2.shape[1]});
  tanh_forward(std::span<const double>(tr.pre2.data), std::span<double>(tr.t2.data));

  tr.dropped.assign(tr.t2.size(), 0.0);
  dropout_forward(plan.mask_a, std::span<const double>(tr.t2.data), tr.dropped);

  tr.y_out.assign(static_cast<std::size_t>(config_.horizon), 0.0);
  linear_forward(head_, tr.dropped.data(), tr.y_out.data());
  check_finite(std::span<const double>(tr.y_out), "cnn forward");
  return tr.y_out;
}

std::vector<double> CnnModel::forward_normalized(const PredictionTask& task,
                                                 std::span<const double>,
                                                 const ForwardPlan& plan) const {
  return forward(task, plan, nullptr);
}

double CnnModel::train_sample(const PredictionTask& task, std::span<const double> target,
                              const ForwardPlan& plan) {
  validate_task(task, /*inference=*/false);
  const auto target_norm = normalize_target(target);
  Trace tr;
  const auto pred = forward(task, plan, &tr);

  std::vector<double> dpred(pred.size());
  const double loss = mse_loss(pred, target_norm, dpred);

  std::vector<double> ddropped(tr.dropped.size(), 0.0);
  linear_backward(head_, tr.dropped.data(), dpred.data(), ddropped.data());
  std::vector<double> dt2(tr.t2.size(), 0.0);
  dropout_backward(plan.mask_a, ddropped, dt2);

  Tensor dpre2 = Tensor::zeros({tr.pre2.shape[0], tr.pre2.shape[1]});
  tanh_backward(std::span<const double>(tr.t2.data), dt2, std::span<double>(dpre2.data));

  Tensor dt1 = Tensor::zeros({tr.t1.shape[0], tr.t1.shape[1]});
  conv1d_backward(conv2_, tr.t1, dpre2, dt1);

  Tensor dpre1 = Tensor::zeros({tr.pre1.shape[0], tr.pre1.shape[1]});
  tanh_backward(std::span<const double>(tr.t1.data), std::span<const double>(dt1.data),
                std::span<double>(dpre1.data));

  Tensor dinput = Tensor::zeros({static_cast<std::size_t>(config_.history_len),
                                 static_cast<std::size_t>(config_.input_width())});
  conv1d_backward(conv1_, tr.input, dpre1, dinput);

  if (config_.env_input) {
    align_backward_rows(align_, tr.env_norm, dinput, env_row_offset(tr.env_norm.size()));
  }
  return loss;
}

// ---------------------------------------------------------------------------
// BiLSTM baseline

struct BiLstmModel::Trace {
  std::vector<EnvRow> env_norm;
  Tensor input;
  Tensor input_rev;
  LstmSeqCache fwd, bwd;
  std::vector<double> concat_dropped;
  std::vector<double> y_out;
};

BiLstmModel::BiLstmModel(const ModelConfig& config, const Normalizer& norm, Rng init)
    : Model(config, norm) {
  if (config_.env_input) {
    align_.init(static_cast<std::size_t>(config_.align_width), kEnvChannels, init);
  }
  const auto h = static_cast<std::size_t>(config_.hidden);
  const auto in = static_cast<std::size_t>(config_.input_width());
  fwd_.init(h, in, init);
  bwd_.init(h, in, init);
  head_.init(static_cast<std::size_t>(config_.horizon), 2 * h, init);
  register_params();
}

void BiLstmModel::collect(std::vector<Tensor*>& params, std::vector<Tensor*>& grads,
                          std::vector<std::string>& names) {
  fwd_.collect(params, grads, names, "fwd");
  bwd_.collect(params, grads, names, "bwd");
  head_.collect(params, grads, names, "head");
}

ForwardPlan BiLstmModel::make_plan(Rng& rng, bool training) const {
  ForwardPlan plan;
  plan.training = training;
  plan.mask_a = make_dropout_mask(2 * static_cast<std::size_t>(config_.hidden),
                                  config_.dropout, training, rng);
  return plan;
}

std::vector<double> BiLstmModel::forward(const PredictionTask& task,
                                         const ForwardPlan& plan, Trace* trace) const {
  Trace local;
  Trace& tr = trace ? *trace : local;
  tr.env_norm = normalized_env(task);
  tr.input = assemble_input(task);

  const std::size_t t_len = tr.input.shape[0];
  tr.input_rev = Tensor::zeros({t_len, tr.input.shape[1]});
  for (std::size_t t = 0; t < t_len; ++t) {
    std::copy(tr.input.row(t_len - 1 - t), tr.input.row(t_len - 1 - t) + tr.input.shape[1],
              tr.input_rev.row(t));
  }

  lstm_seq_forward(fwd_, tr.input, tr.fwd);
  lstm_seq_forward(bwd_, tr.input_rev, tr.bwd);

  const auto h = static_cast<std::size_t>(config_.hidden);
  std::vector<double> concat(2 * h);
  std::copy(tr.fwd.steps.back().h.begin(), tr.fwd.steps.back().h.end(), concat.begin());
  std::copy(tr.bwd.steps.back().h.begin(), tr.bwd.steps.back().h.end(),
            concat.begin() + static_cast<long>(h));

  tr.concat_dropped.assign(2 * h, 0.0);
  dropout_forward(plan.mask_a, concat, tr.concat_dropped);

  tr.y_out.assign(static_cast<std::size_t>(config_.horizon), 0.0);
  linear_forward(head_, tr.concat_dropped.data(), tr.y_out.data());
  check_finite(std::span<const double>(tr.y_out), "bilstm forward");
  return tr.y_out;
}

std::vector<double> BiLstmModel::forward_normalized(const PredictionTask& task,
                                                    std::span<const double>,
                                                    const ForwardPlan& plan) const {
  return forward(task, plan, nullptr);
}

double BiLstmModel::train_sample(const PredictionTask& task,
                                 std::span<const double> target,
                                 const ForwardPlan& plan) {
  validate_task(task, /*inference=*/false);
  const auto target_norm = normalize_target(target);
  Trace tr;
  const auto pred = forward(task, plan, &tr);

  std::vector<double> dpred(pred.size());
  const double loss = mse_loss(pred, target_norm, dpred);

  const auto h = static_cast<std::size_t>(config_.hidden);
  std::vector<double> dconcat_dropped(2 * h, 0.0), dconcat(2 * h, 0.0);
  linear_backward(head_, tr.concat_dropped.data(), dpred.data(), dconcat_dropped.data());
  dropout_backward(plan.mask_a, dconcat_dropped, dconcat);

  const auto t_len = static_cast<std::size_t>(config_.history_len);
  const auto width = static_cast<std::size_t>(config_.input_width());
  Tensor dzero = Tensor::zeros({t_len, h});
  Tensor dinput = Tensor::zeros({t_len, width});
  lstm_seq_backward(fwd_, tr.fwd, dzero, dconcat.data(), nullptr, dinput);

  Tensor dinput_rev = Tensor::zeros({t_len, width});
  lstm_seq_backward(bwd_, tr.bwd, dzero, dconcat.data() + h, nullptr, dinput_rev);
  for (std::size_t t = 0; t < t_len; ++t) {
    const double* src = dinput_rev.row(t);
    double* dst = dinput.row(t_len - 1 - t);
    for (std::size_t c = 0; c < width; ++c) dst[c] += src[c];
  }

  if (config_.env_input) {
    align_backward_rows(align_, tr.env_norm, dinput, env_row_offset(tr.env_norm.size()));
  }
  return loss;
}

}  // namespace acp
