#include <cstdio>
#include <doctest.h>
#include <filesystem>

#include "accelpred/common.hpp"
#include "accelpred/model.hpp"
#include "accelpred/model_impl.hpp"
#include "test_support.hpp"

using namespace acp;

namespace {

ModelConfig toy_config(ModelKind kind, bool env, int history = 8, int horizon = 3) {
  ModelConfig c;
  c.kind = kind;
  c.history_len = history;
  c.horizon = horizon;
  c.env_input = env;
  c.hidden = 4;
  c.attn_width = 3;
  c.align_width = 2;
  c.ann_hidden = 6;
  c.conv_channels = 3;
  c.conv_kernel = 2;
  c.dropout = 0.2;
  c.teacher_forcing = 0.5;
  c.init_seed = 321;
  return c;
}

}  // namespace

TEST_SUITE_BEGIN("model");

TEST_CASE("assemble_input widths: env off 2, env on 2 + align") {
  Normalizer norm;
  auto off = build_model(toy_config(ModelKind::seq2seq, false), norm);
  const auto task_off = test::make_task(8, 3, false);
  const Tensor in_off = off->assemble_input(task_off);
  CHECK(in_off.shape[0] == 8);
  CHECK(in_off.shape[1] == 2);

  auto on = build_model(toy_config(ModelKind::seq2seq, true), norm);
  const auto task_on = test::make_task(8, 3, true);
  const Tensor in_on = on->assemble_input(task_on);
  CHECK(in_on.shape[0] == 8);
  CHECK(in_on.shape[1] == 4);
  // env rows are right-aligned: early rows carry zeros in the env columns
  for (std::size_t t = 0; t < 5; ++t) {
    CHECK(in_on.at(t, 2) == doctest::Approx(0.0));
    CHECK(in_on.at(t, 3) == doctest::Approx(0.0));
  }
}

TEST_CASE("assemble_input: zero-mean unit-std constants leave values unscaled") {
  Normalizer norm;  // identity by construction
  auto model = build_model(toy_config(ModelKind::seq2seq, false), norm);
  const auto task = test::make_task(8, 3, false);
  const Tensor in = model->assemble_input(task);
  for (std::size_t t = 0; t < 8; ++t) {
    CHECK(in.at(t, 0) == doctest::Approx(task.history[t][0]));
    CHECK(in.at(t, 1) == doctest::Approx(task.history[t][1]));
  }
}

TEST_CASE("ann shapes: flattened 100x2 input, horizon 10") {
  ModelConfig c = toy_config(ModelKind::ann, false, 100, 10);
  Normalizer norm;
  AnnModel model(c, norm, Rng(1));
  // first FC consumes the flattened history, the head emits the horizon
  bool found_fc1 = false, found_head = false;
  const auto& names = model.parameter_names();
  const auto& params = model.parameters();
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == "fc1.w") {
      CHECK(params[i]->shape[1] == 200);
      found_fc1 = true;
    }
    if (names[i] == "head.w") {
      CHECK(params[i]->shape[0] == 10);
      found_head = true;
    }
  }
  CHECK(found_fc1);
  CHECK(found_head);
}

TEST_CASE("unknown model kind is rejected") {
  CHECK_THROWS_AS(parse_model_kind("transformer"), ValidationError);
}

TEST_CASE("predict: output length, horizon cap, determinism") {
  Normalizer norm;
  auto model = build_model(toy_config(ModelKind::seq2seq, true, 10, 5), norm);
  auto task = test::make_task(10, 5, true);
  const auto y1 = model->predict(task);
  const auto y2 = model->predict(task);
  CHECK(y1.size() == 5);
  CHECK(y1 == y2);

  auto shorter = test::make_task(10, 3, true);
  const auto y3 = model->predict(shorter);
  CHECK(y3.size() == 3);

  auto too_long = test::make_task(10, 6, true);
  CHECK_THROWS_AS(model->predict(too_long), ValidationError);

  auto bad_history = test::make_task(9, 5, true);
  CHECK_THROWS_AS(model->predict(bad_history), ValidationError);
}

TEST_CASE("gradients: every family at toy size, dropout and teacher forcing active") {
  for (ModelKind kind : {ModelKind::seq2seq, ModelKind::bilstm, ModelKind::rnn,
                         ModelKind::ann, ModelKind::cnn}) {
    for (bool env : {false, true}) {
      CAPTURE(to_string(kind));
      CAPTURE(env);
      ModelConfig c = toy_config(kind, env);
      Normalizer norm;
      auto model = build_model(c, norm);
      const auto task = test::make_task(8, 3, env);
      const auto target = test::make_target(3);
      Rng plan_rng(5150);
      const ForwardPlan plan = model->make_plan(plan_rng, /*training=*/true);
      const auto r = test::check_model_gradients(*model, task, target, plan);
      INFO("worst: ", r.worst);
      CHECK(r.max_rel < 1e-4);
    }
  }
}

TEST_CASE("env-toggle consistency: zeroed alignment equals the env-less twin") {
  ModelConfig c_on = toy_config(ModelKind::seq2seq, true);
  Normalizer norm;
  Seq2SeqModel with_env(c_on, norm, Rng(9));
  // zero the alignment layer
  const auto& names = with_env.parameter_names();
  const auto& params = with_env.parameters();
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i].rfind("align", 0) == 0) params[i]->fill(0.0);
  }

  ModelConfig c_off = c_on;
  c_off.env_input = false;
  Seq2SeqModel without_env(c_off, norm, Rng(9));
  // share every non-align parameter; the encoder input weights shrink to the
  // first two input columns
  const auto& names_off = without_env.parameter_names();
  const auto& params_off = without_env.parameters();
  for (std::size_t i = 0; i < names_off.size(); ++i) {
    const Tensor* src = nullptr;
    for (std::size_t j = 0; j < names.size(); ++j) {
      if (names[j] == names_off[i]) src = params[j];
    }
    REQUIRE(src != nullptr);
    Tensor& dst = *params_off[i];
    if (names_off[i] == "encoder.wx") {
      REQUIRE(src->shape[1] == 4);
      REQUIRE(dst.shape[1] == 2);
      for (std::size_t r = 0; r < dst.shape[0]; ++r) {
        for (std::size_t col = 0; col < 2; ++col) dst.at(r, col) = src->at(r, col);
      }
    } else {
      REQUIRE(dst.shape == src->shape);
      dst = *src;
    }
  }

  const auto task_on = test::make_task(8, 3, true);
  PredictionTask task_off = task_on;
  task_off.env.clear();
  const auto y_on = with_env.predict(task_on);
  const auto y_off = without_env.predict(task_off);
  REQUIRE(y_on.size() == y_off.size());
  for (std::size_t i = 0; i < y_on.size(); ++i) {
    CHECK(y_on[i] == doctest::Approx(y_off[i]).epsilon(1e-9));
  }
}

TEST_CASE("serialization round trip preserves config, norm and predictions") {
  ModelConfig c = toy_config(ModelKind::seq2seq, true);
  Normalizer norm;
  norm.hist_mean = {21.0, 0.1};
  norm.hist_std = {2.5, 0.3};
  norm.target_mean = 0.11;
  norm.target_std = 0.29;
  for (int i = 0; i < kEnvChannels; ++i) {
    norm.env_mean[static_cast<std::size_t>(i)] = i;
    norm.env_std[static_cast<std::size_t>(i)] = 1.0 + 0.1 * i;
  }
  auto model = build_model(c, norm);
  const auto task = test::make_task(8, 3, true);
  const auto y = model->predict(task);

  const std::string path =
      (std::filesystem::temp_directory_path() / "acp_model_roundtrip.bin").string();
  model->save(path);
  auto loaded = Model::load(path);
  CHECK(loaded->config().kind == ModelKind::seq2seq);
  CHECK(loaded->config().horizon == 3);
  CHECK(loaded->norm().target_std == doctest::Approx(0.29));
  const auto y2 = loaded->predict(task);
  REQUIRE(y.size() == y2.size());
  for (std::size_t i = 0; i < y.size(); ++i) CHECK(y[i] == y2[i]);
  std::remove(path.c_str());
}

TEST_CASE("bad model files are rejected") {
  const auto dir = std::filesystem::temp_directory_path();
  const std::string path = (dir / "acp_not_a_model.bin").string();
  {
    std::ofstream out(path, std::ios::binary);
    out << "garbage";
  }
  CHECK_THROWS_AS(Model::load(path), IoError);
  std::remove(path.c_str());
}

TEST_SUITE_END();
