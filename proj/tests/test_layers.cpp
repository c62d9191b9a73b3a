#include <cmath>
#include <doctest.h>
#include <numbers>

#include "accelpred/common.hpp"
#include "accelpred/layers.hpp"
#include "accelpred/optim.hpp"
#include "test_support.hpp"

using namespace acp;

TEST_SUITE_BEGIN("layers");

TEST_CASE("softmax examples") {
  std::vector<double> out(3);
  softmax(std::vector<double>{0, 0, 0}, out);
  for (double v : out) CHECK(v == doctest::Approx(1.0 / 3.0));

  std::vector<double> out2(2);
  softmax(std::vector<double>{1000, 1000}, out2);
  CHECK(out2[0] == doctest::Approx(0.5));
  CHECK(out2[1] == doctest::Approx(0.5));

  softmax(std::vector<double>{1, 2}, out2);
  CHECK(out2[0] == doctest::Approx(1.0 / (1.0 + std::numbers::e)).epsilon(1e-9));
  CHECK(out2[1] == doctest::Approx(std::numbers::e / (1.0 + std::numbers::e)).epsilon(1e-9));

  // positive, sums to one, shift invariant
  Rng rng(4);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<double> x(5), p(5), p_shift(5);
    for (auto& v : x) v = rng.normal(0, 10);
    softmax(x, p);
    double sum = 0;
    for (double v : p) {
      CHECK(v > 0.0);
      sum += v;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    for (auto& v : x) v += 123.456;
    softmax(x, p_shift);
    for (std::size_t i = 0; i < p.size(); ++i) {
      CHECK(p[i] == doctest::Approx(p_shift[i]).epsilon(1e-9));
    }
  }
}

TEST_CASE("lstm: zero weights keep the cell at zero") {
  Rng rng(1);
  LstmParams p;
  p.init(4, 3, rng);
  p.wx.fill(0);
  p.wh.fill(0);
  p.b.fill(0);
  Tensor x = Tensor::zeros({5, 3});
  for (auto& v : x.data) v = 1.7;
  LstmSeqCache cache;
  lstm_seq_forward(p, x, cache);
  CHECK(cache.steps.size() == 5);
  for (const auto& step : cache.steps) {
    for (double h : step.h) CHECK(h == doctest::Approx(0.0));
    for (double c : step.c) CHECK(c == doctest::Approx(0.0));
    // gates sit at 0.5 (sigmoid of 0), candidate at 0
    for (std::size_t i = 0; i < 4; ++i) CHECK(step.gates[i] == doctest::Approx(0.5));
    for (std::size_t i = 8; i < 12; ++i) CHECK(step.gates[i] == doctest::Approx(0.0));
  }
}

TEST_CASE("lstm: single step hand evaluation, H=1") {
  Rng rng(1);
  LstmParams p;
  p.init(1, 1, rng);
  // gate order: input, forget, candidate, output
  p.wx.data = {0.5, -0.3, 0.8, 0.2};
  p.wh.data = {0.1, 0.2, -0.1, 0.4};
  p.b.data = {0.05, 1.0, -0.2, 0.3};
  const double x = 0.7, h_prev = 0.25, c_prev = -0.4;

  LstmStepCache cache;
  const double xv[1] = {x}, hv[1] = {h_prev}, cv[1] = {c_prev};
  lstm_step_forward(p, xv, hv, cv, cache);

  auto sig = [](double z) { return 1.0 / (1.0 + std::exp(-z)); };
  const double gi = sig(0.5 * x + 0.1 * h_prev + 0.05);
  const double gf = sig(-0.3 * x + 0.2 * h_prev + 1.0);
  const double gc = std::tanh(0.8 * x - 0.1 * h_prev - 0.2);
  const double go = sig(0.2 * x + 0.4 * h_prev + 0.3);
  const double c = gf * c_prev + gi * gc;
  const double h = go * std::tanh(c);

  CHECK(cache.gates[0] == doctest::Approx(gi).epsilon(1e-12));
  CHECK(cache.gates[1] == doctest::Approx(gf).epsilon(1e-12));
  CHECK(cache.gates[2] == doctest::Approx(gc).epsilon(1e-12));
  CHECK(cache.gates[3] == doctest::Approx(go).epsilon(1e-12));
  CHECK(cache.c[0] == doctest::Approx(c).epsilon(1e-12));
  CHECK(cache.h[0] == doctest::Approx(h).epsilon(1e-12));
}

TEST_CASE("lstm: hidden sequence length equals input length, forget bias starts at 1") {
  Rng rng(6);
  LstmParams p;
  p.init(3, 2, rng);
  for (std::size_t i = 3; i < 6; ++i) CHECK(p.b[i] == doctest::Approx(1.0));
  Tensor x = Tensor::zeros({17, 2});
  LstmSeqCache cache;
  lstm_seq_forward(p, x, cache);
  CHECK(cache.steps.size() == 17);
  Tensor bad = Tensor::zeros({4, 5});
  CHECK_THROWS_AS(lstm_seq_forward(p, bad, cache), ValidationError);
}

TEST_CASE("lstm: finite-difference gradients") {
  Rng rng(42);
  LstmParams p;
  p.init(3, 2, rng);
  Tensor x = Tensor::zeros({4, 2});
  for (auto& v : x.data) v = rng.normal(0, 1);
  std::vector<double> target(3);
  for (auto& v : target) v = rng.normal(0, 1);

  std::vector<Tensor*> params, grads;
  std::vector<std::string> names;
  p.collect(params, grads, names, "lstm");

  auto loss_and_grad = [&]() {
    for (Tensor* g : grads) g->fill(0.0);
    LstmSeqCache cache;
    lstm_seq_forward(p, x, cache);
    std::vector<double> dh(3);
    const double loss = mse_loss(cache.steps.back().h, target, dh);
    Tensor dh_seq = Tensor::zeros({4, 3});
    Tensor dx = Tensor::zeros({4, 2});
    lstm_seq_backward(p, cache, dh_seq, dh.data(), nullptr, dx);
    return loss;
  };
  const auto r = test::finite_diff_check(params, grads, names, loss_and_grad);
  CHECK(r.max_rel < 1e-4);
}

TEST_CASE("rnn: finite-difference gradients") {
  Rng rng(43);
  RnnParams p;
  p.init(3, 2, rng);
  Tensor x = Tensor::zeros({5, 2});
  for (auto& v : x.data) v = rng.normal(0, 1);
  std::vector<double> target(3);
  for (auto& v : target) v = rng.normal(0, 1);

  std::vector<Tensor*> params, grads;
  std::vector<std::string> names;
  p.collect(params, grads, names, "rnn");

  auto loss_and_grad = [&]() {
    for (Tensor* g : grads) g->fill(0.0);
    RnnSeqCache cache;
    rnn_seq_forward(p, x, cache);
    std::vector<double> dh(3);
    const double loss =
        mse_loss(std::span<const double>(cache.h.row(4), 3), target, dh);
    Tensor dh_seq = Tensor::zeros({5, 3});
    Tensor dx = Tensor::zeros({5, 2});
    rnn_seq_backward(p, cache, dh_seq, dh.data(), dx);
    return loss;
  };
  const auto r = test::finite_diff_check(params, grads, names, loss_and_grad);
  CHECK(r.max_rel < 1e-4);
}

TEST_CASE("attention: uniform weights for equal scores, saturation for a spike") {
  Rng rng(7);
  AttentionParams p;
  p.init(3, 2, rng);
  Tensor h_enc = Tensor::zeros({4, 2});
  for (auto& v : h_enc.data) v = rng.normal(0, 1);
  const double query[2] = {0.3, -0.2};

  SUBCASE("zero v gives uniform weights") {
    p.v.fill(0.0);
    AttentionCache cache;
    attention_forward(p, query, h_enc, cache);
    double sum = 0.0;
    for (std::size_t j = 0; j < 4; ++j) {
      CHECK(cache.weights[j] == doctest::Approx(0.25).epsilon(1e-9));
      sum += cache.weights[j];
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    // context is then the plain average of encoder states
    for (std::size_t i = 0; i < 2; ++i) {
      double avg = 0.0;
      for (std::size_t j = 0; j < 4; ++j) avg += 0.25 * h_enc.at(j, i);
      CHECK(cache.context[i] == doctest::Approx(avg).epsilon(1e-9));
    }
  }

  SUBCASE("weights always form a probability distribution") {
    for (int rep = 0; rep < 30; ++rep) {
      for (auto& v : p.v.data) v = rng.normal(0, 2);
      for (auto& v : p.attn.w.data) v = rng.normal(0, 2);
      AttentionCache cache;
      attention_forward(p, query, h_enc, cache);
      double sum = 0.0;
      for (std::size_t j = 0; j < 4; ++j) {
        CHECK(cache.weights[j] >= 0.0);
        sum += cache.weights[j];
      }
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    }
  }

  SUBCASE("empty encoder sequence rejected") {
    Tensor empty = Tensor::zeros({0, 2});
    AttentionCache cache;
    CHECK_THROWS_AS(attention_forward(p, query, empty, cache), ValidationError);
  }
}

TEST_CASE("attention: hand evaluation, T=3, H=2") {
  AttentionParams p;
  Rng rng(2);
  p.init(2, 2, rng);
  p.attn.w.data = {0.1, -0.2, 0.3, 0.05,   // row 0 over [s0 s1 h0 h1]
                   -0.15, 0.25, 0.1, 0.2}; // row 1
  p.attn.b.data = {0.02, -0.03};
  p.v.data = {0.7, -0.4};
  Tensor h_enc = Tensor::zeros({3, 2});
  h_enc.data = {0.5, -0.1, -0.3, 0.8, 0.2, 0.4};
  const double query[2] = {0.6, -0.5};

  AttentionCache cache;
  attention_forward(p, query, h_enc, cache);

  double scores[3];
  for (int j = 0; j < 3; ++j) {
    const double in[4] = {0.6, -0.5, h_enc.at(static_cast<std::size_t>(j), 0),
                          h_enc.at(static_cast<std::size_t>(j), 1)};
    const double z0 = std::tanh(0.1 * in[0] - 0.2 * in[1] + 0.3 * in[2] + 0.05 * in[3] + 0.02);
    const double z1 = std::tanh(-0.15 * in[0] + 0.25 * in[1] + 0.1 * in[2] + 0.2 * in[3] - 0.03);
    scores[j] = 0.7 * z0 - 0.4 * z1;
  }
  const double m = std::max({scores[0], scores[1], scores[2]});
  double exp_sum = 0.0;
  for (double s : scores) exp_sum += std::exp(s - m);
  for (int j = 0; j < 3; ++j) {
    CHECK(cache.weights[static_cast<std::size_t>(j)] ==
          doctest::Approx(std::exp(scores[j] - m) / exp_sum).epsilon(1e-12));
  }
  double ctx0 = 0.0, ctx1 = 0.0;
  for (std::size_t j = 0; j < 3; ++j) {
    ctx0 += cache.weights[j] * h_enc.at(j, 0);
    ctx1 += cache.weights[j] * h_enc.at(j, 1);
  }
  CHECK(cache.context[0] == doctest::Approx(ctx0).epsilon(1e-12));
  CHECK(cache.context[1] == doctest::Approx(ctx1).epsilon(1e-12));
}

TEST_CASE("attention: finite-difference gradients") {
  Rng rng(77);
  AttentionParams p;
  p.init(3, 2, rng);
  Tensor h_enc = Tensor::zeros({4, 2});
  for (auto& v : h_enc.data) v = rng.normal(0, 1);
  std::vector<double> query = {0.4, -0.7};
  std::vector<double> target = {0.2, 0.1};

  std::vector<Tensor*> params, grads;
  std::vector<std::string> names;
  p.collect(params, grads, names, "att");

  auto loss_and_grad = [&]() {
    for (Tensor* g : grads) g->fill(0.0);
    AttentionCache cache;
    attention_forward(p, query.data(), h_enc, cache);
    std::vector<double> dctx(2);
    const double loss = mse_loss(cache.context, target, dctx);
    std::vector<double> dq(2, 0.0);
    Tensor dh = Tensor::zeros({4, 2});
    attention_backward(p, h_enc, cache, dctx.data(), nullptr, dq.data(), dh);
    return loss;
  };
  const auto r = test::finite_diff_check(params, grads, names, loss_and_grad);
  CHECK(r.max_rel < 1e-4);
}

TEST_CASE("conv1d: shapes and finite-difference gradients") {
  Rng rng(5);
  Conv1dParams p;
  p.init(2, 3, 3, rng);
  Tensor x = Tensor::zeros({7, 3});
  for (auto& v : x.data) v = rng.normal(0, 1);

  Tensor y;
  conv1d_forward(p, x, y);
  CHECK(y.shape[0] == 5);  // 7 - 3 + 1
  CHECK(y.shape[1] == 2);

  std::vector<double> target(y.size());
  for (auto& v : target) v = rng.normal(0, 1);

  std::vector<Tensor*> params, grads;
  std::vector<std::string> names;
  p.collect(params, grads, names, "conv");

  auto loss_and_grad = [&]() {
    for (Tensor* g : grads) g->fill(0.0);
    Tensor out;
    conv1d_forward(p, x, out);
    std::vector<double> dout(out.size());
    const double loss = mse_loss(out.data, target, dout);
    Tensor dy = out;
    dy.data = dout;
    Tensor dx = Tensor::zeros({7, 3});
    conv1d_backward(p, x, dy, dx);
    return loss;
  };
  const auto r = test::finite_diff_check(params, grads, names, loss_and_grad);
  CHECK(r.max_rel < 1e-4);

  Tensor too_short = Tensor::zeros({2, 3});
  Tensor out;
  CHECK_THROWS_AS(conv1d_forward(p, too_short, out), ValidationError);
}

TEST_CASE("linear: scalar closed form dL/dw = 2(y-t)x") {
  LinearParams p;
  p.init_zero(1, 1);
  p.w.data = {1.5};
  p.b.data = {0.2};
  const double x = 0.8, t = -0.4;
  double y;
  linear_forward(p, &x, &y);
  CHECK(y == doctest::Approx(1.5 * 0.8 + 0.2));
  std::vector<double> dy(1);
  mse_loss(std::vector<double>{y}, std::vector<double>{t}, dy);
  double dx = 0.0;
  linear_backward(p, &x, dy.data(), &dx);
  CHECK(p.dw[0] == doctest::Approx(2.0 * (y - t) * x).epsilon(1e-12));
  CHECK(p.db[0] == doctest::Approx(2.0 * (y - t)).epsilon(1e-12));
  CHECK(dx == doctest::Approx(2.0 * (y - t) * 1.5).epsilon(1e-12));
}

TEST_CASE("dropout: identity cases and statistics") {
  Rng rng(8);
  Tensor x = Tensor::zeros({50, 40});
  for (auto& v : x.data) v = rng.normal(1.0, 0.1);

  const Tensor same_rate0 = dropout(x, 0.0, true, Rng(1));
  CHECK(same_rate0.data == x.data);
  const Tensor same_inference = dropout(x, 0.9, false, Rng(1));
  CHECK(same_inference.data == x.data);
  CHECK_THROWS_AS(dropout(x, 1.0, true, Rng(1)), ValidationError);

  const Tensor masked = dropout(x, 0.5, true, Rng(2));
  std::size_t kept = 0;
  double sum_masked = 0.0, sum_orig = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (masked[i] != 0.0) {
      ++kept;
      CHECK(masked[i] == doctest::Approx(2.0 * x[i]).epsilon(1e-12));
    }
    sum_masked += masked[i];
    sum_orig += x[i];
  }
  const double kept_frac = static_cast<double>(kept) / static_cast<double>(x.size());
  CHECK(kept_frac > 0.45);
  CHECK(kept_frac < 0.55);
  CHECK(sum_masked == doctest::Approx(sum_orig).epsilon(0.05));
}

TEST_CASE("mse: perfect prediction has zero gradient") {
  std::vector<double> pred = {0.3, -0.2, 1.0};
  std::vector<double> d(3);
  const double loss = mse_loss(pred, pred, d);
  CHECK(loss == doctest::Approx(0.0));
  for (double g : d) CHECK(g == doctest::Approx(0.0));
}

TEST_CASE("adam: zero gradient leaves parameters unchanged") {
  Tensor w = Tensor::from({1.0, -2.0, 3.0});
  Tensor g = Tensor::zeros({3});
  AdamState state;
  state.init({&w});
  adam_step(state, {&w}, {&g});
  CHECK(w.data == std::vector<double>{1.0, -2.0, 3.0});
}

TEST_CASE("adam: one step from zero state, closed form") {
  Tensor w = Tensor::from({0.5});
  Tensor g = Tensor::from({0.3});
  AdamState state;
  state.lr = 0.01;
  state.init({&w});
  adam_step(state, {&w}, {&g});
  // m_hat = g, v_hat = g^2  ->  step = lr * g / (|g| + eps)
  const double expect = 0.5 - 0.01 * 0.3 / (std::sqrt(0.3 * 0.3) + state.eps);
  CHECK(w[0] == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("adam: converges on a quadratic within the step budget") {
  Tensor w = Tensor::from({0.0});
  Tensor g = Tensor::zeros({1});
  AdamState state;
  state.lr = 0.05;
  state.init({&w});
  double best_err = 3.0;
  for (int i = 0; i < 2000; ++i) {
    g[0] = 2.0 * (w[0] - 3.0);
    adam_step(state, {&w}, {&g});
    best_err = std::min(best_err, std::abs(w[0] - 3.0));
  }
  CHECK(best_err <= 1e-3);
}

TEST_SUITE_END();
