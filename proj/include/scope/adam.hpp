#pragma once

#include "scope/types.hpp"

namespace scope {

/// Adam with bias correction and decoupled weight decay. The decay step
/// theta -= lr * wd * theta is applied before the moment update.
struct AdamState {
  Vector m;
  Vector v;
  long step = 0;
  Scalar lr = 4e-4;
  Scalar beta1 = 0.9;
  Scalar beta2 = 0.999;
  Scalar epsilon = 1e-8;
  Scalar weight_decay = 5e-3;

  AdamState() = default;
  explicit AdamState(Index n) : m(Vector::Zero(n)), v(Vector::Zero(n)) {}
};

void adam_step(Vector& params, const Vector& grads, AdamState& state);

}  // namespace scope
