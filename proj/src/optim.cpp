// Copyright 2026 The cycledcn Authors.
// SPDX-License-Identifier: Apache-2.0

#include "cycledcn/optim.hpp"

#include <cmath>

#include "cycledcn/error.hpp"

namespace cdn {

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               const AdamOptions& options) {
  if (params.size() != grads.size() || state.m.size() != params.size()) {
    throw ValidationError("adam_step: parameter/gradient/state size mismatch");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(options.beta1, t);
  const double c2 = 1.0 - std::pow(options.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = options.beta1 * state.m[i] + (1.0 - options.beta1) * grads[i];
    state.v[i] = options.beta2 * state.v[i] + (1.0 - options.beta2) * grads[i] * grads[i];
    if (options.learning_rate == 0.0) continue;
    const double m_hat = state.m[i] / c1;
    const double v_hat = state.v[i] / c2;
    params[i] -= options.learning_rate * m_hat / (std::sqrt(v_hat) + options.eps);
  }
}

}  // namespace cdn
