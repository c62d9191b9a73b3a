#pragma once

#include <string>
#include <vector>

#include "accelpred/rng.hpp"
#include "accelpred/tensor.hpp"

namespace acp {

// Dense kernels. All layers are parameter structs plus free forward/backward
// functions; sequence models keep their own per-step caches. Backward
// functions accumulate into the grad tensors (zero them between steps) and
// into the dx arguments.
namespace linalg {
// y += W x, W is rows x cols row-major
void matvec_acc(const double* w, const double* x, double* y, std::size_t rows,
                std::size_t cols);
// dW += dy (x) x
void outer_acc(double* dw, const double* dy, const double* x, std::size_t rows,
               std::size_t cols);
// dx += W^T dy
void matvec_t_acc(const double* w, const double* dy, double* dx, std::size_t rows,
                  std::size_t cols);
}  // namespace linalg

double sigmoid(double x);

// Max-subtracted softmax; overflow-safe, outputs sum to 1.
void softmax(std::span<const double> scores, std::span<double> out);
// dscores given dprobs, where probs = softmax(scores).
void softmax_backward(std::span<const double> probs, std::span<const double> dprobs,
                      std::span<double> dscores_acc);

struct LinearParams {
  Tensor w;  // out x in
  Tensor b;  // out
  Tensor dw, db;

  void init(std::size_t out, std::size_t in, Rng& rng);
  void init_zero(std::size_t out, std::size_t in);
  std::size_t out_dim() const { return w.shape[0]; }
  std::size_t in_dim() const { return w.shape[1]; }
  void collect(std::vector<Tensor*>& params, std::vector<Tensor*>& grads,
               std::vector<std::string>& names, const std::string& prefix);
};

void linear_forward(const LinearParams& p, const double* x, double* y);
// x is the cached forward input.
void linear_backward(LinearParams& p, const double* x, const double* dy,
                     double* dx_acc);

// Gate order in the stacked 4H tensors: input, forget, candidate, output.
struct LstmParams {
  Tensor wx;  // 4H x I
  Tensor wh;  // 4H x H
  Tensor b;   // 4H, forget block initialized to 1
  Tensor dwx, dwh, db;
  std::size_t input_dim = 0, hidden = 0;

  void init(std::size_t hidden_size, std::size_t input_size, Rng& rng);
  void collect(std::vector<Tensor*>& params, std::vector<Tensor*>& grads,
               std::vector<std::string>& names, const std::string& prefix);
};

// Per-step values needed by the backward pass.
struct LstmStepCache {
  std::vector<double> gates;   // 4H, post-activation
  std::vector<double> c;       // H
  std::vector<double> tanh_c;  // H
  std::vector<double> h;       // H
};

// h_prev/c_prev of the first step are zeros when null.
void lstm_step_forward(const LstmParams& p, const double* x, const double* h_prev,
                       const double* c_prev, LstmStepCache& cache);
// dh: upstream gradient on this step's h (including recurrent contribution);
// dc: upstream on c. Outputs dx_acc (+=), dh_prev/dc_prev overwritten.
void lstm_step_backward(LstmParams& p, const double* x, const double* h_prev,
                        const double* c_prev, const LstmStepCache& cache,
                        const double* dh, const double* dc, double* dx_acc,
                        double* dh_prev, double* dc_prev);

struct LstmSeqCache {
  std::vector<LstmStepCache> steps;
  const Tensor* input = nullptr;
};

// Runs the cell over input (T x I) from a zero initial state.
void lstm_seq_forward(const LstmParams& p, const Tensor& input, LstmSeqCache& cache);
// dh_seq (T x H) upstream per step, plus optional gradient on the final
// state; accumulates dinput (T x I).
void lstm_seq_backward(LstmParams& p, const LstmSeqCache& cache, const Tensor& dh_seq,
                       const double* dh_final, const double* dc_final,
                       Tensor& dinput_acc);

struct RnnParams {
  Tensor wx;  // H x I
  Tensor wh;  // H x H
  Tensor b;   // H
  Tensor dwx, dwh, db;
  std::size_t input_dim = 0, hidden = 0;

  void init(std::size_t hidden_size, std::size_t input_size, Rng& rng);
  void collect(std::vector<Tensor*>& params, std::vector<Tensor*>& grads,
               std::vector<std::string>& names, const std::string& prefix);
};

struct RnnSeqCache {
  Tensor h;  // T x H, post-tanh
  const Tensor* input = nullptr;
};

void rnn_seq_forward(const RnnParams& p, const Tensor& input, RnnSeqCache& cache);
void rnn_seq_backward(RnnParams& p, const RnnSeqCache& cache, const Tensor& dh_seq,
                      const double* dh_final, Tensor& dinput_acc);

// Additive attention: score_j = v . tanh(attn([query; h_j])), weights are the
// softmax over encoder steps, context = sum_j weights_j h_j.
struct AttentionParams {
  LinearParams attn;  // A x 2H
  Tensor v;           // A
  Tensor dv;

  void init(std::size_t width, std::size_t hidden, Rng& rng);
  std::size_t width() const { return v.shape[0]; }
  void collect(std::vector<Tensor*>& params, std::vector<Tensor*>& grads,
               std::vector<std::string>& names, const std::string& prefix);
};

struct AttentionCache {
  Tensor z;        // T x A, tanh of the attn layer output
  Tensor weights;  // T
  std::vector<double> context;  // H
  std::vector<double> query;    // H
};

void attention_forward(const AttentionParams& p, const double* query,
                       const Tensor& h_enc, AttentionCache& cache);
// dcontext/dweights upstream (dweights may be null); accumulates dquery and
// dh_enc.
void attention_backward(AttentionParams& p, const Tensor& h_enc,
                        const AttentionCache& cache, const double* dcontext,
                        const double* dweights, double* dquery_acc,
                        Tensor& dh_enc_acc);

// 1-D convolution over the sequence axis, valid padding, stride 1.
struct Conv1dParams {
  Tensor w;  // F x (C*K), kernel position fastest
  Tensor b;  // F
  Tensor dw, db;
  std::size_t in_channels = 0, out_channels = 0, kernel = 0;

  void init(std::size_t out_ch, std::size_t in_ch, std::size_t kernel_size, Rng& rng);
  void collect(std::vector<Tensor*>& params, std::vector<Tensor*>& grads,
               std::vector<std::string>& names, const std::string& prefix);
};

// input T x C -> output (T-K+1) x F
void conv1d_forward(const Conv1dParams& p, const Tensor& input, Tensor& output);
void conv1d_backward(Conv1dParams& p, const Tensor& input, const Tensor& doutput,
                     Tensor& dinput_acc);

void tanh_forward(std::span<const double> x, std::span<double> y);
// y is the cached tanh output.
void tanh_backward(std::span<const double> y, std::span<const double> dy,
                   std::span<double> dx_acc);

// Inverted dropout. The mask holds 0 or 1/(1-rate) per element; training
// draws it from the rng, inference is the identity (empty mask).
struct DropoutMask {
  std::vector<double> mask;
  bool active = false;
};

DropoutMask make_dropout_mask(std::size_t size, double rate, bool training, Rng& rng);
void dropout_forward(const DropoutMask& m, std::span<const double> x,
                     std::span<double> y);
void dropout_backward(const DropoutMask& m, std::span<const double> dy,
                      std::span<double> dx);

// Convenience form mirroring the layer set's contract.
Tensor dropout(const Tensor& x, double rate, bool training, Rng rng);

// Mean squared error over equal-length spans; gradient is written per element.
double mse_loss(std::span<const double> pred, std::span<const double> target,
                std::span<double> dpred);

}  // namespace acp
