// SPDX-License-Identifier: Apache-2.0
//
// Shared test utilities: finite-difference gradient checking (double
// precision) and small random tensor builders.
#pragma once

#include <functional>
#include <random>

#include "pld/autograd.hpp"
#include "pld/tensor.hpp"

namespace testutil {

using DTensor = pld::TensorT<double>;
using DVar = pld::VarT<double>;

inline DTensor rand_tensor(std::vector<int> shape, std::mt19937_64& rng, double lo = -1.0,
                           double hi = 1.0) {
  DTensor t(std::move(shape));
  std::uniform_real_distribution<double> d(lo, hi);
  for (auto& v : t.data) v = d(rng);
  return t;
}

// random values kept away from zero so ReLU-style kinks do not sit
// inside the finite-difference interval
inline DTensor rand_tensor_away_from_zero(std::vector<int> shape, std::mt19937_64& rng,
                                          double margin = 0.05) {
  DTensor t = rand_tensor(std::move(shape), rng);
  for (auto& v : t.data)
    if (std::abs(v) < margin) v = v < 0 ? v - margin : v + margin;
  return t;
}

/// Compares analytic gradients of a scalar loss against central finite
/// differences for every element of every parameter. loss_fn must
/// rebuild the graph from the parameters' current values on each call.
/// Returns the worst relative error seen.
inline double max_grad_rel_err(const std::vector<DVar>& params,
                               const std::function<DVar()>& loss_fn, double h = 1e-4) {
  for (const auto& p : params) {
    p->requires_grad = true;
    if (p->grad_ready) p->zero_grad();
  }
  DVar loss = loss_fn();
  pld::backward(loss);

  double worst = 0;
  for (const auto& p : params) {
    for (int64_t i = 0; i < p->value.numel(); ++i) {
      const double orig = p->value.data[i];
      p->value.data[i] = orig + h;
      const double lp = loss_fn()->value.data[0];
      p->value.data[i] = orig - h;
      const double lm = loss_fn()->value.data[0];
      p->value.data[i] = orig;
      const double fd = (lp - lm) / (2 * h);
      const double an = p->grad.data[i];
      const double err = std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-6});
      worst = std::max(worst, err);
    }
  }
  return worst;
}

}  // namespace testutil
