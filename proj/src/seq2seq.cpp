#include <algorithm>

#include "accelpred/common.hpp"
#include "accelpred/model_impl.hpp"

namespace acp {

struct Seq2SeqModel::Trace {
  std::vector<EnvRow> env_norm;
  Tensor input;
  LstmSeqCache enc;
  Tensor h_used;  // encoder hidden sequence after dropout
  AttentionCache att_init;
  std::vector<AttentionCache> att_step;
  std::vector<LstmStepCache> dec_step;
  std::vector<std::vector<double>> dec_x;  // [y_prev; context] per step
  std::vector<double> h0;                  // decoder initial hidden = context
  Tensor h_dropped;                        // decoder hidden after dropout, m x H
  std::vector<double> y_out;
};

Seq2SeqModel::Seq2SeqModel(const ModelConfig& config, const Normalizer& norm, Rng init)
    : Model(config, norm) {
  if (config_.env_input) {
    align_.init(static_cast<std::size_t>(config_.align_width), kEnvChannels, init);
  }
  const auto h = static_cast<std::size_t>(config_.hidden);
  encoder_.init(h, static_cast<std::size_t>(config_.input_width()), init);
  attention_.init(static_cast<std::size_t>(config_.attn_width), h, init);
  decoder_.init(h, 1 + h, init);
  out_.init(1, h, init);
  register_params();
}

void Seq2SeqModel::collect(std::vector<Tensor*>& params, std::vector<Tensor*>& grads,
                           std::vector<std::string>& names) {
  encoder_.collect(params, grads, names, "encoder");
  attention_.collect(params, grads, names, "attention");
  decoder_.collect(params, grads, names, "decoder");
  out_.collect(params, grads, names, "out");
}

ForwardPlan Seq2SeqModel::make_plan(Rng& rng, bool training) const {
  ForwardPlan plan;
  plan.training = training;
  const auto t_len = static_cast<std::size_t>(config_.history_len);
  const auto h = static_cast<std::size_t>(config_.hidden);
  const auto m = static_cast<std::size_t>(config_.horizon);
  plan.mask_a = make_dropout_mask(t_len * h, config_.dropout, training, rng);
  plan.mask_b = make_dropout_mask(m * h, config_.dropout, training, rng);
  plan.teacher.assign(m, 0);
  if (training) {
    for (auto& f : plan.teacher) f = rng.uniform() < config_.teacher_forcing ? 1 : 0;
  }
  return plan;
}

std::vector<double> Seq2SeqModel::forward(const PredictionTask& task,
                                          std::span<const double> target_norm,
                                          const ForwardPlan& plan, Trace* trace) const {
  Trace local;
  Trace& tr = trace ? *trace : local;

  tr.env_norm = normalized_env(task);
  tr.input = assemble_input(task);

  const auto t_len = static_cast<std::size_t>(config_.history_len);
  const auto h = static_cast<std::size_t>(config_.hidden);
  const auto m = static_cast<std::size_t>(task.horizon);

  lstm_seq_forward(encoder_, tr.input, tr.enc);
  tr.h_used = Tensor::zeros({t_len, h});
  for (std::size_t t = 0; t < t_len; ++t) {
    std::copy(tr.enc.steps[t].h.begin(), tr.enc.steps[t].h.end(), tr.h_used.row(t));
  }
  dropout_forward(plan.mask_a, std::span<const double>(tr.h_used.data),
                  std::span<double>(tr.h_used.data));
  check_finite(tr.h_used, "seq2seq encoder");

  // Decoder h0 is the context of attention queried with the encoder's final
  // hidden state.
  attention_forward(attention_, tr.h_used.row(t_len - 1), tr.h_used, tr.att_init);
  tr.h0 = tr.att_init.context;

  tr.att_step.resize(m);
  tr.dec_step.resize(m);
  tr.dec_x.assign(m, std::vector<double>(1 + h, 0.0));
  tr.h_dropped = Tensor::zeros({m, h});
  tr.y_out.assign(m, 0.0);

  // Free-running seed: the most recent history acceleration in target space.
  double y_prev =
      (task.history.back()[1] - norm_.target_mean) / norm_.target_std;

  std::vector<double> c_state(h, 0.0);
  const double* h_state = tr.h0.data();
  const double* c_prev = c_state.data();
  for (std::size_t i = 0; i < m; ++i) {
    attention_forward(attention_, h_state, tr.h_used, tr.att_step[i]);
    auto& x = tr.dec_x[i];
    x[0] = y_prev;
    std::copy(tr.att_step[i].context.begin(), tr.att_step[i].context.end(),
              x.begin() + 1);
    const double* hp = i == 0 ? tr.h0.data() : tr.dec_step[i - 1].h.data();
    const double* cp = i == 0 ? c_prev : tr.dec_step[i - 1].c.data();
    lstm_step_forward(decoder_, x.data(), hp, cp, tr.dec_step[i]);

    std::span<const double> h_now(tr.dec_step[i].h);
    std::span<double> hd(tr.h_dropped.row(i), h);
    if (plan.mask_b.active) {
      for (std::size_t j = 0; j < h; ++j) {
        hd[j] = h_now[j] * plan.mask_b.mask[i * h + j];
      }
    } else {
      std::copy(h_now.begin(), h_now.end(), hd.begin());
    }
    linear_forward(out_, tr.h_dropped.row(i), &tr.y_out[i]);

    const bool teach = plan.training && i < plan.teacher.size() && plan.teacher[i] != 0;
    y_prev = teach ? target_norm[i] : tr.y_out[i];
    h_state = tr.dec_step[i].h.data();
  }
  check_finite(std::span<const double>(tr.y_out), "seq2seq decoder");
  return tr.y_out;
}

std::vector<double> Seq2SeqModel::forward_normalized(const PredictionTask& task,
                                                     std::span<const double> target_norm,
                                                     const ForwardPlan& plan) const {
  return forward(task, target_norm, plan, nullptr);
}

double Seq2SeqModel::train_sample(const PredictionTask& task,
                                  std::span<const double> target,
                                  const ForwardPlan& plan) {
  validate_task(task, /*inference=*/false);
  const std::vector<double> target_norm = normalize_target(target);
  Trace tr;
  const std::vector<double> pred = forward(task, target_norm, plan, &tr);

  const auto m = static_cast<std::size_t>(config_.horizon);
  const auto h = static_cast<std::size_t>(config_.hidden);
  const auto t_len = static_cast<std::size_t>(config_.history_len);

  std::vector<double> dpred(m);
  const double loss = mse_loss(pred, target_norm, dpred);

  // dh_state[i] / dc_state[i] collect the upstream gradient on decoder state
  // h_i / c_i (h_0 is the initial context).
  std::vector<std::vector<double>> dh_state(m + 1, std::vector<double>(h, 0.0));
  std::vector<std::vector<double>> dc_state(m + 1, std::vector<double>(h, 0.0));
  Tensor dh_used = Tensor::zeros({t_len, h});
  std::vector<double> dh_dropped(h), dh_prev(h), dc_prev(h), dx(1 + h);
  std::vector<double> c0(h, 0.0);

  double dy_chain = 0.0;  // gradient flowing into y_out[i] from step i+1's input
  for (std::size_t i = m; i-- > 0;) {
    const double dy = dpred[i] + dy_chain;
    std::fill(dh_dropped.begin(), dh_dropped.end(), 0.0);
    linear_backward(out_, tr.h_dropped.row(i), &dy, dh_dropped.data());
    if (plan.mask_b.active) {
      for (std::size_t j = 0; j < h; ++j) {
        dh_state[i + 1][j] += dh_dropped[j] * plan.mask_b.mask[i * h + j];
      }
    } else {
      for (std::size_t j = 0; j < h; ++j) dh_state[i + 1][j] += dh_dropped[j];
    }

    const double* hp = i == 0 ? tr.h0.data() : tr.dec_step[i - 1].h.data();
    const double* cp = i == 0 ? c0.data() : tr.dec_step[i - 1].c.data();
    std::fill(dx.begin(), dx.end(), 0.0);
    lstm_step_backward(decoder_, tr.dec_x[i].data(), hp, cp, tr.dec_step[i],
                       dh_state[i + 1].data(), dc_state[i + 1].data(), dx.data(),
                       dh_prev.data(), dc_prev.data());
    for (std::size_t j = 0; j < h; ++j) {
      dh_state[i][j] += dh_prev[j];
      dc_state[i][j] += dc_prev[j];
    }

    const bool teach = i > 0 && plan.teacher[i - 1] != 0;
    dy_chain = (i > 0 && !teach) ? dx[0] : 0.0;

    attention_backward(attention_, tr.h_used, tr.att_step[i], dx.data() + 1,
                       nullptr, dh_state[i].data(), dh_used);
  }

  // h_0 = context of the initial attention, queried with the final encoder row.
  attention_backward(attention_, tr.h_used, tr.att_init, dh_state[0].data(), nullptr,
                     dh_used.row(t_len - 1), dh_used);

  Tensor dh_enc = Tensor::zeros({t_len, h});
  dropout_backward(plan.mask_a, std::span<const double>(dh_used.data),
                   std::span<double>(dh_enc.data));

  Tensor dinput = Tensor::zeros({t_len, static_cast<std::size_t>(config_.input_width())});
  lstm_seq_backward(encoder_, tr.enc, dh_enc, nullptr, nullptr, dinput);

  if (config_.env_input) {
    const std::size_t offset = env_row_offset(tr.env_norm.size());
    for (std::size_t r = 0; r < tr.env_norm.size(); ++r) {
      linear_backward(align_, tr.env_norm[r].data(), dinput.row(offset + r) + 2,
                      nullptr);
    }
  }
  return loss;
}

}  // namespace acp
