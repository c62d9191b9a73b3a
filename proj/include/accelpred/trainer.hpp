#pragma once

#include "accelpred/dataset.hpp"
#include "accelpred/model.hpp"
#include "accelpred/rng.hpp"

namespace acp {

struct TrainConfig {
  int max_steps = 250;
  int batch = 8;
  int eval_every = 40;
  int patience = 4;  // evaluations without improvement before stopping
  double lr = 2e-3;
};

struct TrainOutcome {
  double best_val_mae = 0;  // m/s^2
  int steps = 0;
};

// Mini-batch MSE training with Adam, early stopping on validation MAE; the
// best-validation parameters are left in the model. Deterministic given rng.
TrainOutcome train_model(Model& model, const Dataset& data, const TrainConfig& config,
                         Rng rng);

// Pooled MAE/RMSE of the model over the given sample indices (test split,
// typically), in m/s^2 at the model's horizon.
struct EvalResult {
  double mae = 0;
  double rmse = 0;
  std::size_t count = 0;  // predicted values
};

EvalResult evaluate_model(const Model& model, const Dataset& data,
                          const std::vector<std::size_t>& idx);

}  // namespace acp
