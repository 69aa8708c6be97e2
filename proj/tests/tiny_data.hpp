// Copyright 2026 The cycledcn Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "cycledcn/config.hpp"
#include "cycledcn/dataset.hpp"
#include "cycledcn/phantom.hpp"

namespace cdn::test {

/// Small phantom pairs for fast training tests.
inline std::vector<CasePair> tiny_pairs(std::size_t n, std::uint64_t seed, Shape3 shape = {12, 16, 16}) {
  std::vector<CasePair> out;
  PhantomSpec base;
  base.shape = shape;
  for (std::size_t i = 0; i < n; ++i) {
    const PhantomSpec spec = random_phantom_spec(base, seed + i, 1, 3.0, 2.0, 3.0);
    const Volume full = generate_phantom(spec);
    const Volume low = simulate_low_dose(full, quarter_dose(), 20.0, seed * 31 + i);
    CasePair p = normalize_pair("tiny_" + std::to_string(i), full, low);
    p.tumors = spec.tumors;
    out.push_back(std::move(p));
  }
  return out;
}

inline TrainConfig tiny_config() {
  TrainConfig c;
  c.epochs = 2;
  c.batch_size = 11;
  c.steps_per_epoch = 2;
  c.patch_size = 0;
  c.seed = 5;
  c.model.predictor_depth = 3;
  c.model.predictor_width = 4;
  c.model.consistency_width = 4;
  c.model.discriminator_depth = 2;
  c.model.discriminator_width = 4;
  c.learning_rate_G = 1e-3;
  c.learning_rate_D = 1e-3;
  return c;
}

}  // namespace cdn::test
