#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "accelpred/model.hpp"
#include "accelpred/tensor.hpp"
#include "accelpred/trajectory.hpp"

namespace acp::test {

struct GradCheckResult {
  double max_rel = 0.0;
  std::string worst;
};

// Central finite differences over every parameter scalar against the
// analytic gradients produced by `loss_and_grad` (which zeroes nothing
// itself; grads must be zeroed by the caller convention inside the lambda).
inline GradCheckResult finite_diff_check(const std::vector<Tensor*>& params,
                                         const std::vector<Tensor*>& grads,
                                         const std::vector<std::string>& names,
                                         const std::function<double()>& loss_and_grad,
                                         double eps = 1e-5) {
  loss_and_grad();
  std::vector<Tensor> analytic;
  analytic.reserve(grads.size());
  for (const Tensor* g : grads) analytic.push_back(*g);

  GradCheckResult result;
  for (std::size_t p = 0; p < params.size(); ++p) {
    Tensor& t = *params[p];
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double saved = t[i];
      t[i] = saved + eps;
      const double plus = loss_and_grad();
      t[i] = saved - eps;
      const double minus = loss_and_grad();
      t[i] = saved;
      const double fd = (plus - minus) / (2.0 * eps);
      const double a = analytic[p][i];
      const double rel = std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), 1e-4});
      if (rel > result.max_rel) {
        result.max_rel = rel;
        result.worst = names[p] + "[" + std::to_string(i) + "]";
      }
    }
  }
  return result;
}

// Model-level check: fixed plan, fixed sample.
inline GradCheckResult check_model_gradients(Model& model, const PredictionTask& task,
                                             const std::vector<double>& target,
                                             const ForwardPlan& plan,
                                             double eps = 1e-5) {
  auto loss_and_grad = [&]() {
    model.zero_grads();
    return model.train_sample(task, target, plan);
  };
  return finite_diff_check(model.parameters(), model.gradients(),
                           model.parameter_names(), loss_and_grad, eps);
}

// A strictly-increasing hand track through (t, x, v) triples.
inline VehicleTrack make_track(const std::string& id,
                               const std::vector<std::array<double, 3>>& txv) {
  VehicleTrack track;
  track.vehicle_id = id;
  for (const auto& s : txv) track.samples.push_back({s[0], s[1], s[2], std::nullopt});
  if (!track.samples.empty()) track.entry_time = track.samples.front().t;
  return track;
}

// A toy task with deterministic pseudo-random content.
inline PredictionTask make_task(int history_len, int horizon, bool env,
                                EnvSpan span = EnvSpan::prediction,
                                std::uint64_t seed = 99) {
  Rng rng(seed);
  PredictionTask task;
  task.horizon = horizon;
  for (int i = 0; i < history_len; ++i) {
    task.history.push_back({20.0 + rng.normal(0.0, 1.0), rng.normal(0.0, 0.4)});
  }
  if (env) {
    const int rows = span == EnvSpan::prediction ? horizon : history_len;
    for (int r = 0; r < rows; ++r) {
      EnvRow row{};
      for (auto& v : row) v = rng.normal(0.0, 1.0);
      task.env.push_back(row);
    }
  }
  return task;
}

inline std::vector<double> make_target(int horizon, std::uint64_t seed = 7) {
  Rng rng(seed);
  std::vector<double> t(static_cast<std::size_t>(horizon));
  for (auto& v : t) v = rng.normal(0.1, 0.3);
  return t;
}

}  // namespace acp::test
