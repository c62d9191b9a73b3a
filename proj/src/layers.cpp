#include "accelpred/layers.hpp"

#include <algorithm>
#include <cmath>

#include "accelpred/common.hpp"

namespace acp {

namespace linalg {

void matvec_acc(const double* w, const double* x, double* y, std::size_t rows,
                std::size_t cols) {
  for (std::size_t i = 0; i < rows; ++i) {
    const double* wr = w + i * cols;
    double acc = 0.0;
    for (std::size_t j = 0; j < cols; ++j) acc += wr[j] * x[j];
    y[i] += acc;
  }
}

void outer_acc(double* dw, const double* dy, const double* x, std::size_t rows,
               std::size_t cols) {
  for (std::size_t i = 0; i < rows; ++i) {
    double* dwr = dw + i * cols;
    const double g = dy[i];
    for (std::size_t j = 0; j < cols; ++j) dwr[j] += g * x[j];
  }
}

void matvec_t_acc(const double* w, const double* dy, double* dx, std::size_t rows,
                  std::size_t cols) {
  for (std::size_t i = 0; i < rows; ++i) {
    const double* wr = w + i * cols;
    const double g = dy[i];
    for (std::size_t j = 0; j < cols; ++j) dx[j] += g * wr[j];
  }
}

}  // namespace linalg

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void softmax(std::span<const double> scores, std::span<double> out) {
  if (scores.empty()) throw ValidationError("softmax: empty input");
  double m = scores[0];
  for (double s : scores) m = std::max(m, s);
  double sum = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    out[i] = std::exp(scores[i] - m);
    sum += out[i];
  }
  for (std::size_t i = 0; i < scores.size(); ++i) out[i] /= sum;
}

void softmax_backward(std::span<const double> probs, std::span<const double> dprobs,
                      std::span<double> dscores_acc) {
  double dot = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) dot += probs[i] * dprobs[i];
  for (std::size_t i = 0; i < probs.size(); ++i) {
    dscores_acc[i] += probs[i] * (dprobs[i] - dot);
  }
}

namespace {

void uniform_fan_in(Tensor& t, std::size_t fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (auto& v : t.data) v = rng.uniform(-bound, bound);
}

}  // namespace

void LinearParams::init(std::size_t out, std::size_t in, Rng& rng) {
  w = Tensor::zeros({out, in});
  b = Tensor::zeros({out});
  dw = Tensor::zeros({out, in});
  db = Tensor::zeros({out});
  uniform_fan_in(w, in, rng);
}

void LinearParams::init_zero(std::size_t out, std::size_t in) {
  w = Tensor::zeros({out, in});
  b = Tensor::zeros({out});
  dw = Tensor::zeros({out, in});
  db = Tensor::zeros({out});
}

void LinearParams::collect(std::vector<Tensor*>& params, std::vector<Tensor*>& grads,
                           std::vector<std::string>& names, const std::string& prefix) {
  params.push_back(&w);
  grads.push_back(&dw);
  names.push_back(prefix + ".w");
  params.push_back(&b);
  grads.push_back(&db);
  names.push_back(prefix + ".b");
}

void linear_forward(const LinearParams& p, const double* x, double* y) {
  const std::size_t out = p.out_dim();
  for (std::size_t i = 0; i < out; ++i) y[i] = p.b[i];
  linalg::matvec_acc(p.w.data.data(), x, y, out, p.in_dim());
}

void linear_backward(LinearParams& p, const double* x, const double* dy,
                     double* dx_acc) {
  const std::size_t out = p.out_dim(), in = p.in_dim();
  linalg::outer_acc(p.dw.data.data(), dy, x, out, in);
  for (std::size_t i = 0; i < out; ++i) p.db[i] += dy[i];
  if (dx_acc) linalg::matvec_t_acc(p.w.data.data(), dy, dx_acc, out, in);
}

void LstmParams::init(std::size_t hidden_size, std::size_t input_size, Rng& rng) {
  hidden = hidden_size;
  input_dim = input_size;
  wx = Tensor::zeros({4 * hidden, input_dim});
  wh = Tensor::zeros({4 * hidden, hidden});
  b = Tensor::zeros({4 * hidden});
  uniform_fan_in(wx, input_dim + hidden, rng);
  uniform_fan_in(wh, input_dim + hidden, rng);
  // forget gate bias starts at 1
  for (std::size_t i = hidden; i < 2 * hidden; ++i) b[i] = 1.0;
  dwx = Tensor::zeros({4 * hidden, input_dim});
  dwh = Tensor::zeros({4 * hidden, hidden});
  db = Tensor::zeros({4 * hidden});
}

void LstmParams::collect(std::vector<Tensor*>& params, std::vector<Tensor*>& grads,
                         std::vector<std::string>& names, const std::string& prefix) {
  params.push_back(&wx);
  grads.push_back(&dwx);
  names.push_back(prefix + ".wx");
  params.push_back(&wh);
  grads.push_back(&dwh);
  names.push_back(prefix + ".wh");
  params.push_back(&b);
  grads.push_back(&db);
  names.push_back(prefix + ".b");
}

void lstm_step_forward(const LstmParams& p, const double* x, const double* h_prev,
                       const double* c_prev, LstmStepCache& cache) {
  const std::size_t h = p.hidden;
  cache.gates.assign(4 * h, 0.0);
  cache.c.assign(h, 0.0);
  cache.tanh_c.assign(h, 0.0);
  cache.h.assign(h, 0.0);

  std::vector<double>& g = cache.gates;
  for (std::size_t i = 0; i < 4 * h; ++i) g[i] = p.b[i];
  linalg::matvec_acc(p.wx.data.data(), x, g.data(), 4 * h, p.input_dim);
  if (h_prev) linalg::matvec_acc(p.wh.data.data(), h_prev, g.data(), 4 * h, h);

  for (std::size_t i = 0; i < h; ++i) {
    g[i] = sigmoid(g[i]);                    // input
    g[h + i] = sigmoid(g[h + i]);            // forget
    g[2 * h + i] = std::tanh(g[2 * h + i]);  // candidate
    g[3 * h + i] = sigmoid(g[3 * h + i]);    // output
    const double cp = c_prev ? c_prev[i] : 0.0;
    cache.c[i] = g[h + i] * cp + g[i] * g[2 * h + i];
    cache.tanh_c[i] = std::tanh(cache.c[i]);
    cache.h[i] = g[3 * h + i] * cache.tanh_c[i];
  }
}

void lstm_step_backward(LstmParams& p, const double* x, const double* h_prev,
                        const double* c_prev, const LstmStepCache& cache,
                        const double* dh, const double* dc, double* dx_acc,
                        double* dh_prev, double* dc_prev) {
  const std::size_t h = p.hidden;
  std::vector<double> dgates(4 * h);
  const auto& g = cache.gates;

  for (std::size_t i = 0; i < h; ++i) {
    const double gi = g[i], gf = g[h + i], gc = g[2 * h + i], go = g[3 * h + i];
    const double tc = cache.tanh_c[i];
    const double dci = (dc ? dc[i] : 0.0) + dh[i] * go * (1.0 - tc * tc);
    const double cp = c_prev ? c_prev[i] : 0.0;
    dgates[i] = dci * gc * gi * (1.0 - gi);
    dgates[h + i] = dci * cp * gf * (1.0 - gf);
    dgates[2 * h + i] = dci * gi * (1.0 - gc * gc);
    dgates[3 * h + i] = dh[i] * tc * go * (1.0 - go);
    if (dc_prev) dc_prev[i] = dci * gf;
  }

  linalg::outer_acc(p.dwx.data.data(), dgates.data(), x, 4 * h, p.input_dim);
  if (h_prev) linalg::outer_acc(p.dwh.data.data(), dgates.data(), h_prev, 4 * h, h);
  for (std::size_t i = 0; i < 4 * h; ++i) p.db[i] += dgates[i];
  if (dx_acc) linalg::matvec_t_acc(p.wx.data.data(), dgates.data(), dx_acc, 4 * h, p.input_dim);
  if (dh_prev) {
    std::fill(dh_prev, dh_prev + h, 0.0);
    linalg::matvec_t_acc(p.wh.data.data(), dgates.data(), dh_prev, 4 * h, h);
  }
}

void lstm_seq_forward(const LstmParams& p, const Tensor& input, LstmSeqCache& cache) {
  if (input.shape.size() != 2 || input.shape[1] != p.input_dim) {
    throw ValidationError(
        "lstm_seq_forward: input width " +
        std::to_string(input.shape.size() == 2 ? input.shape[1] : 0) +
        " does not match parameter width " + std::to_string(p.input_dim));
  }
  const std::size_t t_len = input.shape[0];
  cache.input = &input;
  cache.steps.resize(t_len);
  for (std::size_t t = 0; t < t_len; ++t) {
    const double* h_prev = t > 0 ? cache.steps[t - 1].h.data() : nullptr;
    const double* c_prev = t > 0 ? cache.steps[t - 1].c.data() : nullptr;
    lstm_step_forward(p, input.row(t), h_prev, c_prev, cache.steps[t]);
  }
}

void lstm_seq_backward(LstmParams& p, const LstmSeqCache& cache, const Tensor& dh_seq,
                       const double* dh_final, const double* dc_final,
                       Tensor& dinput_acc) {
  const std::size_t t_len = cache.steps.size();
  const std::size_t h = p.hidden;
  std::vector<double> dh(h, 0.0), dc(h, 0.0), dh_prev(h), dc_prev(h);
  if (dh_final) std::copy(dh_final, dh_final + h, dh.begin());
  if (dc_final) std::copy(dc_final, dc_final + h, dc.begin());

  for (std::size_t ti = t_len; ti-- > 0;) {
    for (std::size_t i = 0; i < h; ++i) dh[i] += dh_seq.at(ti, i);
    const double* h_prev = ti > 0 ? cache.steps[ti - 1].h.data() : nullptr;
    const double* c_prev = ti > 0 ? cache.steps[ti - 1].c.data() : nullptr;
    lstm_step_backward(p, cache.input->row(ti), h_prev, c_prev, cache.steps[ti],
                       dh.data(), dc.data(), dinput_acc.row(ti), dh_prev.data(),
                       dc_prev.data());
    dh = dh_prev;
    dc = dc_prev;
  }
}

void RnnParams::init(std::size_t hidden_size, std::size_t input_size, Rng& rng) {
  hidden = hidden_size;
  input_dim = input_size;
  wx = Tensor::zeros({hidden, input_dim});
  wh = Tensor::zeros({hidden, hidden});
  b = Tensor::zeros({hidden});
  uniform_fan_in(wx, input_dim + hidden, rng);
  uniform_fan_in(wh, input_dim + hidden, rng);
  dwx = Tensor::zeros({hidden, input_dim});
  dwh = Tensor::zeros({hidden, hidden});
  db = Tensor::zeros({hidden});
}

void RnnParams::collect(std::vector<Tensor*>& params, std::vector<Tensor*>& grads,
                        std::vector<std::string>& names, const std::string& prefix) {
  params.push_back(&wx);
  grads.push_back(&dwx);
  names.push_back(prefix + ".wx");
  params.push_back(&wh);
  grads.push_back(&dwh);
  names.push_back(prefix + ".wh");
  params.push_back(&b);
  grads.push_back(&db);
  names.push_back(prefix + ".b");
}

void rnn_seq_forward(const RnnParams& p, const Tensor& input, RnnSeqCache& cache) {
  if (input.shape.size() != 2 || input.shape[1] != p.input_dim) {
    throw ValidationError("rnn_seq_forward: input width mismatch");
  }
  const std::size_t t_len = input.shape[0];
  cache.input = &input;
  cache.h = Tensor::zeros({t_len, p.hidden});
  std::vector<double> pre(p.hidden);
  for (std::size_t t = 0; t < t_len; ++t) {
    for (std::size_t i = 0; i < p.hidden; ++i) pre[i] = p.b[i];
    linalg::matvec_acc(p.wx.data.data(), input.row(t), pre.data(), p.hidden, p.input_dim);
    if (t > 0) {
      linalg::matvec_acc(p.wh.data.data(), cache.h.row(t - 1), pre.data(), p.hidden,
                         p.hidden);
    }
    for (std::size_t i = 0; i < p.hidden; ++i) cache.h.at(t, i) = std::tanh(pre[i]);
  }
}

void rnn_seq_backward(RnnParams& p, const RnnSeqCache& cache, const Tensor& dh_seq,
                      const double* dh_final, Tensor& dinput_acc) {
  const std::size_t t_len = cache.h.shape[0];
  const std::size_t h = p.hidden;
  std::vector<double> dh(h, 0.0), dpre(h), dh_prev(h);
  if (dh_final) std::copy(dh_final, dh_final + h, dh.begin());

  for (std::size_t ti = t_len; ti-- > 0;) {
    for (std::size_t i = 0; i < h; ++i) dh[i] += dh_seq.at(ti, i);
    for (std::size_t i = 0; i < h; ++i) {
      const double y = cache.h.at(ti, i);
      dpre[i] = dh[i] * (1.0 - y * y);
    }
    linalg::outer_acc(p.dwx.data.data(), dpre.data(), cache.input->row(ti), h, p.input_dim);
    if (ti > 0) {
      linalg::outer_acc(p.dwh.data.data(), dpre.data(), cache.h.row(ti - 1), h, h);
    }
    for (std::size_t i = 0; i < h; ++i) p.db[i] += dpre[i];
    linalg::matvec_t_acc(p.wx.data.data(), dpre.data(), dinput_acc.row(ti), h, p.input_dim);
    std::fill(dh_prev.begin(), dh_prev.end(), 0.0);
    if (ti > 0) linalg::matvec_t_acc(p.wh.data.data(), dpre.data(), dh_prev.data(), h, h);
    dh = dh_prev;
  }
}

void AttentionParams::init(std::size_t width, std::size_t hidden, Rng& rng) {
  attn.init(width, 2 * hidden, rng);
  v = Tensor::zeros({width});
  uniform_fan_in(v, width, rng);
  dv = Tensor::zeros({width});
}

void AttentionParams::collect(std::vector<Tensor*>& params, std::vector<Tensor*>& grads,
                              std::vector<std::string>& names, const std::string& prefix) {
  attn.collect(params, grads, names, prefix + ".attn");
  params.push_back(&v);
  grads.push_back(&dv);
  names.push_back(prefix + ".v");
}

void attention_forward(const AttentionParams& p, const double* query,
                       const Tensor& h_enc, AttentionCache& cache) {
  if (h_enc.shape.size() != 2 || h_enc.shape[0] == 0) {
    throw ValidationError("attention: empty encoder state sequence");
  }
  const std::size_t t_len = h_enc.shape[0];
  const std::size_t h = h_enc.shape[1];
  const std::size_t a = p.width();
  if (p.attn.in_dim() != 2 * h) {
    throw ValidationError("attention: query/state width " + std::to_string(h) +
                          " does not match parameter width " +
                          std::to_string(p.attn.in_dim() / 2));
  }

  cache.query.assign(query, query + h);
  cache.z = Tensor::zeros({t_len, a});
  cache.weights = Tensor::zeros({t_len});
  cache.context.assign(h, 0.0);

  std::vector<double> concat(2 * h);
  std::vector<double> scores(t_len);
  std::copy(query, query + h, concat.begin());
  for (std::size_t j = 0; j < t_len; ++j) {
    std::copy(h_enc.row(j), h_enc.row(j) + h, concat.begin() + static_cast<long>(h));
    linear_forward(p.attn, concat.data(), cache.z.row(j));
    double score = 0.0;
    for (std::size_t i = 0; i < a; ++i) {
      cache.z.at(j, i) = std::tanh(cache.z.at(j, i));
      score += p.v[i] * cache.z.at(j, i);
    }
    scores[j] = score;
  }
  softmax(scores, std::span<double>(cache.weights.data));
  for (std::size_t j = 0; j < t_len; ++j) {
    const double wj = cache.weights[j];
    const double* hj = h_enc.row(j);
    for (std::size_t i = 0; i < h; ++i) cache.context[i] += wj * hj[i];
  }
}

void attention_backward(AttentionParams& p, const Tensor& h_enc,
                        const AttentionCache& cache, const double* dcontext,
                        const double* dweights, double* dquery_acc,
                        Tensor& dh_enc_acc) {
  const std::size_t t_len = h_enc.shape[0];
  const std::size_t h = h_enc.shape[1];
  const std::size_t a = p.width();

  std::vector<double> dw(t_len, 0.0);
  for (std::size_t j = 0; j < t_len; ++j) {
    if (dweights) dw[j] = dweights[j];
    if (dcontext) {
      const double* hj = h_enc.row(j);
      double acc = 0.0;
      for (std::size_t i = 0; i < h; ++i) acc += dcontext[i] * hj[i];
      dw[j] += acc;
    }
  }
  // context = sum_j w_j h_j also feeds h_enc directly
  if (dcontext) {
    for (std::size_t j = 0; j < t_len; ++j) {
      const double wj = cache.weights[j];
      double* dhj = dh_enc_acc.row(j);
      for (std::size_t i = 0; i < h; ++i) dhj[i] += wj * dcontext[i];
    }
  }

  std::vector<double> dscores(t_len, 0.0);
  softmax_backward(std::span<const double>(cache.weights.data), dw, dscores);

  std::vector<double> dz(a), du(a), concat(2 * h), dconcat(2 * h);
  std::copy(cache.query.begin(), cache.query.end(), concat.begin());
  for (std::size_t j = 0; j < t_len; ++j) {
    const double ds = dscores[j];
    for (std::size_t i = 0; i < a; ++i) {
      const double zj = cache.z.at(j, i);
      p.dv[i] += ds * zj;
      dz[i] = ds * p.v[i];
      du[i] = dz[i] * (1.0 - zj * zj);
    }
    std::copy(h_enc.row(j), h_enc.row(j) + h, concat.begin() + static_cast<long>(h));
    std::fill(dconcat.begin(), dconcat.end(), 0.0);
    linear_backward(p.attn, concat.data(), du.data(), dconcat.data());
    for (std::size_t i = 0; i < h; ++i) {
      if (dquery_acc) dquery_acc[i] += dconcat[i];
      dh_enc_acc.at(j, i) += dconcat[h + i];
    }
  }
}

void Conv1dParams::init(std::size_t out_ch, std::size_t in_ch, std::size_t kernel_size,
                        Rng& rng) {
  out_channels = out_ch;
  in_channels = in_ch;
  kernel = kernel_size;
  w = Tensor::zeros({out_ch, in_ch * kernel_size});
  b = Tensor::zeros({out_ch});
  uniform_fan_in(w, in_ch * kernel_size, rng);
  dw = Tensor::zeros({out_ch, in_ch * kernel_size});
  db = Tensor::zeros({out_ch});
}

void Conv1dParams::collect(std::vector<Tensor*>& params, std::vector<Tensor*>& grads,
                           std::vector<std::string>& names, const std::string& prefix) {
  params.push_back(&w);
  grads.push_back(&dw);
  names.push_back(prefix + ".w");
  params.push_back(&b);
  grads.push_back(&db);
  names.push_back(prefix + ".b");
}

void conv1d_forward(const Conv1dParams& p, const Tensor& input, Tensor& output) {
  if (input.shape.size() != 2 || input.shape[1] != p.in_channels) {
    throw ValidationError("conv1d: input channel mismatch");
  }
  const std::size_t t_in = input.shape[0];
  if (t_in < p.kernel) {
    throw ValidationError("conv1d: input shorter than the kernel");
  }
  const std::size_t t_out = t_in - p.kernel + 1;
  output = Tensor::zeros({t_out, p.out_channels});
  for (std::size_t t = 0; t < t_out; ++t) {
    for (std::size_t f = 0; f < p.out_channels; ++f) {
      const double* wf = p.w.row(f);
      double acc = p.b[f];
      for (std::size_t dt = 0; dt < p.kernel; ++dt) {
        const double* xr = input.row(t + dt);
        const double* wk = wf + dt * p.in_channels;
        for (std::size_t c = 0; c < p.in_channels; ++c) acc += wk[c] * xr[c];
      }
      output.at(t, f) = acc;
    }
  }
}

void conv1d_backward(Conv1dParams& p, const Tensor& input, const Tensor& doutput,
                     Tensor& dinput_acc) {
  const std::size_t t_out = doutput.shape[0];
  for (std::size_t t = 0; t < t_out; ++t) {
    for (std::size_t f = 0; f < p.out_channels; ++f) {
      const double g = doutput.at(t, f);
      p.db[f] += g;
      double* dwf = p.dw.row(f);
      const double* wf = p.w.row(f);
      for (std::size_t dt = 0; dt < p.kernel; ++dt) {
        const double* xr = input.row(t + dt);
        double* dxr = dinput_acc.row(t + dt);
        double* dwk = dwf + dt * p.in_channels;
        const double* wk = wf + dt * p.in_channels;
        for (std::size_t c = 0; c < p.in_channels; ++c) {
          dwk[c] += g * xr[c];
          dxr[c] += g * wk[c];
        }
      }
    }
  }
}

void tanh_forward(std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = std::tanh(x[i]);
}

void tanh_backward(std::span<const double> y, std::span<const double> dy,
                   std::span<double> dx_acc) {
  for (std::size_t i = 0; i < y.size(); ++i) dx_acc[i] += dy[i] * (1.0 - y[i] * y[i]);
}

DropoutMask make_dropout_mask(std::size_t size, double rate, bool training, Rng& rng) {
  if (rate < 0.0 || rate >= 1.0) {
    throw ValidationError("dropout: rate must be in [0, 1), got " + std::to_string(rate));
  }
  DropoutMask m;
  if (!training || rate == 0.0) return m;
  m.active = true;
  m.mask.resize(size);
  const double keep = 1.0 - rate;
  for (auto& v : m.mask) v = rng.uniform() < rate ? 0.0 : 1.0 / keep;
  return m;
}

void dropout_forward(const DropoutMask& m, std::span<const double> x,
                     std::span<double> y) {
  if (!m.active) {
    std::copy(x.begin(), x.end(), y.begin());
    return;
  }
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] * m.mask[i];
}

void dropout_backward(const DropoutMask& m, std::span<const double> dy,
                      std::span<double> dx) {
  if (!m.active) {
    std::copy(dy.begin(), dy.end(), dx.begin());
    return;
  }
  for (std::size_t i = 0; i < dy.size(); ++i) dx[i] = dy[i] * m.mask[i];
}

Tensor dropout(const Tensor& x, double rate, bool training, Rng rng) {
  const DropoutMask m = make_dropout_mask(x.size(), rate, training, rng);
  Tensor y = x;
  dropout_forward(m, std::span<const double>(x.data), std::span<double>(y.data));
  return y;
}

double mse_loss(std::span<const double> pred, std::span<const double> target,
                std::span<double> dpred) {
  if (pred.size() != target.size() || pred.empty()) {
    throw ValidationError("mse_loss: size mismatch or empty input");
  }
  const double inv_n = 1.0 / static_cast<double>(pred.size());
  double loss = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double e = pred[i] - target[i];
    loss += e * e;
    dpred[i] = 2.0 * e * inv_n;
  }
  return loss * inv_n;
}

}  // namespace acp
