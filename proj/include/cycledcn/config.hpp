// Copyright 2026 The cycledcn Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "cycledcn/losses.hpp"
#include "cycledcn/nets.hpp"
#include "cycledcn/phantom.hpp"

namespace cdn {

/// Fixed weights for epochs [from_epoch, to_epoch), replacing the automatic
/// update. Unlisted active terms get zero; the rest is renormalised.
struct WeightOverride {
  std::size_t from_epoch = 0;
  std::size_t to_epoch = 0;
  std::map<LossTerm, double> weights;
};

struct TrainConfig {
  std::string dataset;  // index.json or the directory holding it
  DoseFraction dose_fraction = quarter_dose();
  std::size_t epochs = 100;
  std::size_t batch_size = 12;       // consecutive axial slices per step
  std::size_t steps_per_epoch = 0;   // 0: training slices / batch_size
  std::size_t patch_size = 32;       // square in-plane crop; 0 = whole slice
  double learning_rate_G = 2e-4;
  double learning_rate_D = 1e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  std::uint64_t seed = 0;
  LossSet enabled_losses = LossSet::all();
  double epsilon = 1e-8;
  std::size_t checkpoint_every = 10;
  ModelConfig model;  // includes neighbor_k and fuse_mode
  std::size_t val_max_cases = 2;  // 0: every validation case
  std::size_t val_every = 1;
  bool deterministic = true;
  std::size_t threads = 0;  // worker threads outside deterministic mode; 0 = hardware
  std::vector<WeightOverride> weight_overrides;

  void validate() const;
};

/// Flat YAML mapping; unknown keys are rejected.
TrainConfig config_from_yaml(const std::string& text);
TrainConfig load_config(const std::filesystem::path& path);
std::string config_to_yaml(const TrainConfig& config);

/// Applies a single "key: value" override using the same parser as the file.
void apply_config_override(TrainConfig& config, const std::string& key, const std::string& value);

}  // namespace cdn
