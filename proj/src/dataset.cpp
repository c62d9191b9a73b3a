#include "accelpred/dataset.hpp"

#include <algorithm>
#include <cmath>

#include "accelpred/common.hpp"

namespace acp {

std::vector<Sample> build_windows(const SpatialProfile& profile,
                                  const EnvSequence& env, const WindowParams& params,
                                  int cls) {
  std::vector<Sample> out;
  if (profile.size() == 0) return out;
  const long lo = profile.first_index + params.history_len;
  const long hi = profile.last_index() - params.max_horizon;
  for (long anchor = lo; anchor <= hi; anchor += params.anchor_stride) {
    auto segs = extract_window(profile, anchor, params.history_len, params.max_horizon);
    if (!segs) continue;
    std::optional<std::vector<EnvRow>> env_rows;
    if (params.env_span == EnvSpan::prediction) {
      env_rows = slice_env(env, anchor, params.max_horizon);
    } else {
      env_rows = slice_env(env, anchor - params.history_len, params.history_len);
    }
    if (!env_rows) continue;
    Sample s;
    s.vehicle_id = profile.vehicle_id;
    s.cls = cls;
    s.anchor = anchor;
    s.history = std::move(segs->history);
    s.target = std::move(segs->target);
    s.env = std::move(*env_rows);
    out.push_back(std::move(s));
  }
  return out;
}

std::map<std::string, Split> assign_splits(
    const std::vector<std::pair<std::string, int>>& vehicles, double train_frac,
    double test_frac, double val_frac, Rng rng) {
  if (std::abs(train_frac + test_frac + val_frac - 1.0) > 1e-9) {
    throw ValidationError("assign_splits: split fractions must sum to 1");
  }
  std::map<int, std::vector<std::string>> by_class;
  for (const auto& [id, cls] : vehicles) by_class[cls].push_back(id);

  std::map<std::string, Split> out;
  for (auto& [cls, ids] : by_class) {
    std::sort(ids.begin(), ids.end());
    Rng class_rng = rng.fork(static_cast<std::uint64_t>(cls + 1));
    class_rng.shuffle(ids);
    const auto n = ids.size();
    auto n_train = static_cast<std::size_t>(std::llround(train_frac * static_cast<double>(n)));
    auto n_test = static_cast<std::size_t>(std::llround(test_frac * static_cast<double>(n)));
    // keep each split non-empty once the class is large enough
    if (n >= 3) {
      n_train = std::max<std::size_t>(n_train, 1);
      n_test = std::max<std::size_t>(n_test, 1);
      while (n_train + n_test >= n) {
        if (n_train > 1) --n_train;
        else --n_test;
      }
    } else {
      n_train = std::min(n_train, n);
      n_test = std::min(n_test, n - n_train);
    }
    for (std::size_t i = 0; i < n; ++i) {
      Split s = Split::validation;
      if (i < n_train) s = Split::train;
      else if (i < n_train + n_test) s = Split::test;
      out[ids[i]] = s;
    }
  }
  return out;
}

Dataset make_dataset(std::vector<Sample> samples,
                     const std::map<std::string, Split>& splits, int cls_filter) {
  Dataset data;
  for (auto& s : samples) {
    if (cls_filter >= 0 && s.cls != cls_filter) continue;
    const auto it = splits.find(s.vehicle_id);
    if (it == splits.end()) {
      throw ValidationError("make_dataset: vehicle " + s.vehicle_id + " has no split");
    }
    const std::size_t idx = data.samples.size();
    data.samples.push_back(std::move(s));
    switch (it->second) {
      case Split::train: data.train_idx.push_back(idx); break;
      case Split::test: data.test_idx.push_back(idx); break;
      case Split::validation: data.val_idx.push_back(idx); break;
    }
  }
  return data;
}

Normalizer fit_normalizer(const Dataset& data) {
  if (data.train_idx.empty()) {
    throw ValidationError("fit_normalizer: empty training split");
  }
  Normalizer n;
  double hist_sum[2] = {0, 0}, hist_sq[2] = {0, 0};
  double env_sum[kEnvChannels] = {0}, env_sq[kEnvChannels] = {0};
  double tgt_sum = 0, tgt_sq = 0;
  std::size_t hist_n = 0, env_n = 0, tgt_n = 0;

  for (std::size_t idx : data.train_idx) {
    const Sample& s = data.samples[idx];
    for (const auto& row : s.history) {
      for (int c = 0; c < 2; ++c) {
        hist_sum[c] += row[static_cast<std::size_t>(c)];
        hist_sq[c] += row[static_cast<std::size_t>(c)] * row[static_cast<std::size_t>(c)];
      }
      ++hist_n;
    }
    for (const auto& row : s.env) {
      for (int c = 0; c < kEnvChannels; ++c) {
        env_sum[c] += row[static_cast<std::size_t>(c)];
        env_sq[c] += row[static_cast<std::size_t>(c)] * row[static_cast<std::size_t>(c)];
      }
      ++env_n;
    }
    for (double t : s.target) {
      tgt_sum += t;
      tgt_sq += t * t;
      ++tgt_n;
    }
  }

  auto finish = [](double sum, double sq, std::size_t count, double& mean, double& std) {
    mean = sum / static_cast<double>(count);
    const double var = sq / static_cast<double>(count) - mean * mean;
    std = var > 1e-24 ? std::sqrt(var) : 1.0;
  };
  for (int c = 0; c < 2; ++c) {
    finish(hist_sum[c], hist_sq[c], hist_n, n.hist_mean[static_cast<std::size_t>(c)],
           n.hist_std[static_cast<std::size_t>(c)]);
  }
  if (env_n > 0) {
    for (int c = 0; c < kEnvChannels; ++c) {
      finish(env_sum[c], env_sq[c], env_n, n.env_mean[static_cast<std::size_t>(c)],
             n.env_std[static_cast<std::size_t>(c)]);
    }
  }
  finish(tgt_sum, tgt_sq, tgt_n, n.target_mean, n.target_std);
  return n;
}

PredictionTask task_for(const Sample& sample, const ModelConfig& config) {
  PredictionTask task;
  task.history = sample.history;
  task.horizon = config.horizon;
  if (config.env_input) {
    if (config.env_span == EnvSpan::prediction) {
      task.env.assign(sample.env.begin(),
                      sample.env.begin() + static_cast<long>(config.horizon));
    } else {
      task.env = sample.env;
    }
  }
  return task;
}

std::span<const double> target_for(const Sample& sample, int horizon) {
  return {sample.target.data(), static_cast<std::size_t>(horizon)};
}

}  // namespace acp
