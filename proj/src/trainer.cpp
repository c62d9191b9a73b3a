#include "accelpred/trainer.hpp"

#include <cmath>
#include <limits>

#include "accelpred/common.hpp"
#include "accelpred/optim.hpp"

namespace acp {
namespace {

double validation_mae(const Model& model, const Dataset& data,
                      const std::vector<std::size_t>& idx) {
  double abs_sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i : idx) {
    const Sample& s = data.samples[i];
    const auto pred = model.predict(task_for(s, model.config()));
    const auto target = target_for(s, model.config().horizon);
    for (std::size_t j = 0; j < pred.size(); ++j) {
      abs_sum += std::abs(pred[j] - target[j]);
      ++count;
    }
  }
  return abs_sum / static_cast<double>(count);
}

}  // namespace

TrainOutcome train_model(Model& model, const Dataset& data, const TrainConfig& config,
                         Rng rng) {
  if (data.train_idx.empty()) throw ValidationError("train_model: empty training split");
  if (data.val_idx.empty()) throw ValidationError("train_model: empty validation split");
  if (config.max_steps < 1 || config.batch < 1) {
    throw ValidationError("train_model: max_steps and batch must be >= 1");
  }

  Rng shuffle_rng = rng.fork("shuffle");
  Rng plan_rng = rng.fork("plan");

  AdamState adam;
  adam.lr = config.lr;
  adam.init(model.parameters());

  std::vector<std::size_t> queue;
  std::size_t queue_pos = 0;
  auto next_index = [&]() {
    if (queue_pos >= queue.size()) {
      queue = data.train_idx;
      shuffle_rng.shuffle(queue);
      queue_pos = 0;
    }
    return queue[queue_pos++];
  };

  std::vector<Tensor> best_params;
  double best_mae = std::numeric_limits<double>::infinity();
  int stale = 0;
  const double inv_batch = 1.0 / static_cast<double>(config.batch);

  auto snapshot = [&]() {
    best_params.clear();
    for (Tensor* p : model.parameters()) best_params.push_back(*p);
  };
  auto evaluate = [&](int step) {
    const double mae = validation_mae(model, data, data.val_idx);
    if (mae < best_mae - 1e-12) {
      best_mae = mae;
      snapshot();
      stale = 0;
    } else {
      ++stale;
    }
    return step >= config.max_steps || stale > config.patience;
  };

  int step = 0;
  while (step < config.max_steps) {
    ++step;
    model.zero_grads();
    for (int b = 0; b < config.batch; ++b) {
      const Sample& s = data.samples[next_index()];
      const ForwardPlan plan = model.make_plan(plan_rng, /*training=*/true);
      model.train_sample(task_for(s, model.config()),
                         target_for(s, model.config().horizon), plan);
    }
    const auto& grads = model.gradients();
    const auto& names = model.parameter_names();
    for (std::size_t i = 0; i < grads.size(); ++i) {
      for (auto& g : grads[i]->data) g *= inv_batch;
      check_finite(*grads[i], "gradient of " + names[i]);
    }
    adam_step(adam, model.parameters(), model.gradients());

    if (step % config.eval_every == 0 || step == config.max_steps) {
      if (evaluate(step)) break;
    }
  }
  if (best_params.empty()) evaluate(step);

  const auto& params = model.parameters();
  for (std::size_t i = 0; i < params.size(); ++i) *params[i] = best_params[i];

  return {best_mae, step};
}

EvalResult evaluate_model(const Model& model, const Dataset& data,
                          const std::vector<std::size_t>& idx) {
  EvalResult r;
  double abs_sum = 0.0, sq_sum = 0.0;
  for (std::size_t i : idx) {
    const Sample& s = data.samples[i];
    const auto pred = model.predict(task_for(s, model.config()));
    const auto target = target_for(s, model.config().horizon);
    for (std::size_t j = 0; j < pred.size(); ++j) {
      const double e = pred[j] - target[j];
      abs_sum += std::abs(e);
      sq_sum += e * e;
      ++r.count;
    }
  }
  if (r.count == 0) throw ValidationError("evaluate_model: no samples");
  r.mae = abs_sum / static_cast<double>(r.count);
  r.rmse = std::sqrt(sq_sum / static_cast<double>(r.count));
  return r;
}

}  // namespace acp
