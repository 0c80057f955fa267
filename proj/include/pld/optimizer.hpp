// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <string>

#include "pld/autograd.hpp"
#include "pld/tensor.hpp"

namespace pld {

/// SGD with momentum and decoupled-from-nothing L2 weight decay:
///   v <- momentum * v + (grad + weight_decay * param)
///   param <- param - lr * v
struct SgdState {
  float momentum = 0.9f;
  float weight_decay = 1e-5f;
  float learning_rate = 0.1f;
  std::map<std::string, Tensor> velocity;  // keyed by parameter name

  void step(const std::string& name, Var& param) {
    if (!param->grad_ready) return;
    auto it = velocity.find(name);
    if (it == velocity.end()) it = velocity.emplace(name, Tensor(param->value.shape)).first;
    Tensor& v = it->second;
    if (!v.same_shape(param->value)) throw std::invalid_argument("sgd: velocity shape mismatch");
    const int64_t n = param->value.numel();
    for (int64_t i = 0; i < n; ++i) {
      v.data[i] = momentum * v.data[i] +
                  (param->grad.data[i] + weight_decay * param->value.data[i]);
      param->value.data[i] -= learning_rate * v.data[i];
    }
  }
};

/// Staircase learning-rate schedule with optional exponential decay
/// (rate^(iter/steps)) layered on top; exponential decay is off by
/// default.
struct LrSchedule {
  float base_lr = 0.1f;
  long boundary1 = 6000;  // lr/10 after this many iterations
  long boundary2 = 12000; // lr/100 after this many
  bool exp_decay = false;
  float decay_rate = 0.9f;
  long decay_steps = 1000;

  float at(long iter) const {
    float lr = base_lr;
    if (iter >= boundary2)
      lr = base_lr / 100.f;
    else if (iter >= boundary1)
      lr = base_lr / 10.f;
    if (exp_decay) lr *= std::pow(decay_rate, static_cast<float>(iter / decay_steps));
    return lr;
  }
};

}  // namespace pld
