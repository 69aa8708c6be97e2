// Copyright 2026 The cycledcn Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "cycledcn/config.hpp"
#include "cycledcn/dataset.hpp"
#include "cycledcn/losses.hpp"
#include "cycledcn/nets.hpp"
#include "cycledcn/optim.hpp"
#include "cycledcn/volume.hpp"

namespace cdn {

/// One row of the loss log.
struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  LossBreakdown losses;   // epoch means
  LossWeights weights;    // inverse-loss weights derived from `losses`
  double val_psnr = std::numeric_limits<double>::quiet_NaN();
  double val_ssim = std::numeric_limits<double>::quiet_NaN();
};

struct TrainingState {
  TrainConfig config;
  CycleModel model;
  AdamState opt_predictor;
  AdamState opt_consistency;
  AdamState opt_d_low;
  AdamState opt_d_full;
  LossWeights weights;     // weights in force for the next epoch
  std::size_t epoch = 0;   // completed epochs
  double best_val_psnr = -std::numeric_limits<double>::infinity();
  std::size_t best_epoch = 0;
  std::vector<EpochRecord> log;

  static TrainingState create(const TrainConfig& config);
};

/// Consecutive axial slices (same crop) of one case; the plane SSIM term
/// reslices this block.
struct Batch {
  std::vector<PairedSample> samples;
};

/// Slices [z0, z0 + count) of a pair, cropped.
Batch make_batch(const CasePair& pair, std::size_t z0, std::size_t count, std::size_t neighbor_k,
                 const Crop& crop = {});

/// Generator-side gradients of the weighted total over a batch. Losses are
/// unweighted batch means; the fakes are kept for the discriminator step.
struct GeneratorGradients {
  LossBreakdown losses;
  std::vector<double> predictor;
  std::vector<double> consistency;
  std::vector<Tensor> fake_low;
  std::vector<Tensor> fake_full;
};
GeneratorGradients generator_gradients(const CycleModel& model, const LossSet& enabled,
                                       const LossWeights& weights, const Batch& batch,
                                       bool deterministic = true, std::size_t threads = 0);
/// Forward-only evaluation of the same generator terms.
LossBreakdown generator_losses(const CycleModel& model, const LossSet& enabled, const Batch& batch);

struct DiscriminatorGradients {
  double loss = 0.0;
  std::vector<double> grads;
};
/// Batch-mean least-squares objective of D_O (low_domain) or D_U and its gradient.
DiscriminatorGradients discriminator_gradients(const Discriminator& d, std::span<const Tensor> fakes,
                                               std::span<const Tensor> reals, bool low_domain);

/// One generator update on the weighted total, then one update each of D_O and
/// D_U on the (detached) fakes from the same forward pass. Returns the losses
/// evaluated during the step, before the parameter updates.
LossBreakdown train_step(TrainingState& state, const Batch& batch);

struct TrainHooks {
  std::function<void(const TrainingState&, const EpochRecord&)> on_epoch;
  std::function<void(const TrainingState&)> on_checkpoint;
};

/// Continues training from state.epoch up to state.config.epochs.
void train(TrainingState& state, std::span<const CasePair> train_cases,
           std::span<const CasePair> val_cases, const TrainHooks& hooks = {});

/// Weights for epoch index `epoch`: a matching override, else uniform without
/// a previous epoch, else the inverse-loss update of its means.
LossWeights weights_for_epoch(const TrainConfig& config, std::size_t epoch,
                              const LossBreakdown* previous_epoch_means);

/// Applies P to every axial slice. Input must lie in [0, 1].
Volume denoise_volume(const CycleModel& model, const Volume& low);

/// Mean |n(x)| of the extraction-direction noise over all voxels.
double mean_abs_predicted_noise(const CycleModel& model, const Volume& input);

/// Mean |x - P(x)|: the noise actually removed after clamping to [0, 1].
double mean_abs_extracted_noise(const CycleModel& model, const Volume& input);

struct ValidationScore {
  double psnr = 0.0;
  double ssim = 0.0;
};
ValidationScore validate_model(const CycleModel& model, std::span<const CasePair> cases);

}  // namespace cdn
