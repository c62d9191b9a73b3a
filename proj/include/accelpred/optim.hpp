#pragma once

#include <vector>

#include "accelpred/tensor.hpp"

namespace acp {

// Adam with bias correction. Moment tensors mirror the parameter shapes.
struct AdamState {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long step = 0;
  std::vector<Tensor> m;
  std::vector<Tensor> v;

  void init(const std::vector<Tensor*>& params);
};

void adam_step(AdamState& state, const std::vector<Tensor*>& params,
               const std::vector<Tensor*>& grads);

}  // namespace acp
