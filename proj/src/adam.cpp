#include "scope/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace scope {

void adam_step(Vector& params, const Vector& grads, AdamState& state) {
  if (params.size() != grads.size() || params.size() != state.m.size() ||
      params.size() != state.v.size()) {
    throw std::invalid_argument("adam_step: shape mismatch");
  }
  state.step += 1;

  if (state.weight_decay != 0.0) {
    params -= state.lr * state.weight_decay * params;
  }

  state.m = state.beta1 * state.m + (1.0 - state.beta1) * grads;
  state.v = state.beta2 * state.v + (1.0 - state.beta2) * grads.cwiseProduct(grads);

  const Scalar c1 = 1.0 - std::pow(state.beta1, static_cast<Scalar>(state.step));
  const Scalar c2 = 1.0 - std::pow(state.beta2, static_cast<Scalar>(state.step));
  params -= (state.lr / c1) *
            (state.m.array() / ((state.v.array() / c2).sqrt() + state.epsilon))
                .matrix();
}

}  // namespace scope
