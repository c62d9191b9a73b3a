#include "accelpred/optim.hpp"

#include <cmath>

#include "accelpred/common.hpp"

namespace acp {

void AdamState::init(const std::vector<Tensor*>& params) {
  step = 0;
  m.clear();
  v.clear();
  for (const Tensor* p : params) {
    Tensor zero = *p;
    zero.fill(0.0);
    m.push_back(zero);
    v.push_back(zero);
  }
}

void adam_step(AdamState& state, const std::vector<Tensor*>& params,
               const std::vector<Tensor*>& grads) {
  if (params.size() != grads.size() || params.size() != state.m.size()) {
    throw ValidationError("adam_step: parameter/gradient/state count mismatch");
  }
  state.step += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = *params[i];
    const Tensor& g = *grads[i];
    if (p.size() != g.size()) {
      throw ValidationError("adam_step: shape mismatch at parameter " + std::to_string(i));
    }
    Tensor& mi = state.m[i];
    Tensor& vi = state.v[i];
    for (std::size_t j = 0; j < p.size(); ++j) {
      mi[j] = state.beta1 * mi[j] + (1.0 - state.beta1) * g[j];
      vi[j] = state.beta2 * vi[j] + (1.0 - state.beta2) * g[j] * g[j];
      const double m_hat = mi[j] / bc1;
      const double v_hat = vi[j] / bc2;
      p[j] -= state.lr * m_hat / (std::sqrt(v_hat) + state.eps);
    }
  }
}

}  // namespace acp
