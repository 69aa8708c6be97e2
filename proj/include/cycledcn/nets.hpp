// Copyright 2026 The cycledcn Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "cycledcn/layers.hpp"
#include "cycledcn/tensor.hpp"

namespace cdn {

/// Extract removes predicted noise (P), Add injects it (P').
/// Encoded as a constant extra input plane: 0 = extract, 1 = add.
enum class Direction { Extract = 0, Add = 1 };

enum class FuseMode { ElementwiseAdd, Network };

std::string to_string(FuseMode mode);
FuseMode parse_fuse_mode(const std::string& text);

/// A target axial slice with its 2k z-neighbours stacked as channels in the
/// order z-k, ..., z-1, z+1, ..., z+k. Edge slices are replicated.
struct SliceContext {
  Tensor target;     // (1, h, w)
  Tensor neighbors;  // (2k, h, w); empty when k == 0
  std::size_t z_index = 0;

  std::size_t k() const noexcept { return neighbors.channels() / 2; }
  /// Shape and [0, 1] range checks.
  void validate() const;
};

/// DnCNN-style residual stack. The head sees [target, direction plane]; its
/// output is fused with the neighbour context before the first ReLU.
class NoisePredictor {
 public:
  NoisePredictor() = default;
  NoisePredictor(std::size_t depth, std::size_t width);

  /// He-normal hidden layers; the tail is zero so the initial noise is zero.
  void initialize(std::mt19937_64& rng);

  std::size_t depth() const noexcept { return depth_; }
  std::size_t width() const noexcept { return width_; }
  ParamSet& params() noexcept { return params_; }
  const ParamSet& params() const noexcept { return params_; }
  const Conv2d& head() const noexcept { return head_; }
  const std::vector<Conv2d>& body() const noexcept { return body_; }
  const Conv2d& tail() const noexcept { return tail_; }

 private:
  std::size_t depth_ = 0;
  std::size_t width_ = 0;
  ParamSet params_;
  Conv2d head_;
  std::vector<Conv2d> body_;
  Conv2d tail_;
};

/// Shallow encoder over stacked neighbour slices producing a feature map with
/// the predictor's width, plus the learned fusion used in Network mode.
class ConsistencyNet {
 public:
  ConsistencyNet() = default;  // disabled: k == 0
  ConsistencyNet(std::size_t neighbor_k, std::size_t hidden, std::size_t feature_width,
                 FuseMode mode);

  void initialize(std::mt19937_64& rng);
  /// Fusion weights computing features + context exactly.
  void set_identity_fusion();

  bool enabled() const noexcept { return k_ > 0; }
  std::size_t neighbor_k() const noexcept { return k_; }
  std::size_t feature_width() const noexcept { return feature_width_; }
  FuseMode fuse_mode() const noexcept { return mode_; }
  ParamSet& params() noexcept { return params_; }
  const ParamSet& params() const noexcept { return params_; }

  struct EncodeCache {
    Tensor input;
    Tensor pre1, post1, pre2, post2;
  };
  Tensor encode(const Tensor& neighbors, EncodeCache* cache = nullptr) const;
  void encode_backward(const EncodeCache& cache, const Tensor& d_context,
                       std::span<double> grads) const;

  const Conv2d& fusion() const noexcept { return fusion_; }

 private:
  std::size_t k_ = 0;
  std::size_t hidden_ = 0;
  std::size_t feature_width_ = 0;
  FuseMode mode_ = FuseMode::ElementwiseAdd;
  ParamSet params_;
  Conv2d enc1_, enc2_, enc3_;
  Conv2d fusion_;  // 1x1 over [features, context]; used in Network mode
};

/// Combine target features with neighbour context. Network mode needs the
/// consistency net holding the fusion weights.
Tensor fuse_neighbors(const Tensor& target_features, const Tensor& neighbor_context, FuseMode mode,
                      const ConsistencyNet* net = nullptr);

struct NoiseCache {
  Tensor input;  // (2, h, w)
  Tensor head;
  Tensor context;
  bool fused = false;
  std::vector<Tensor> pre;   // pre-activations, first entry is the fused map
  std::vector<Tensor> post;  // ReLU outputs feeding the next conv
};

Tensor predict_noise(const NoisePredictor& predictor, const ConsistencyNet& consistency,
                     const Tensor& target, const Tensor* context_map, Direction direction,
                     NoiseCache* cache = nullptr);
Tensor predict_noise(const NoisePredictor& predictor, const ConsistencyNet& consistency,
                     const SliceContext& ctx, const Tensor* context_map, Direction direction);

struct NoiseGrad {
  Tensor target;   // empty unless requested
  Tensor context;  // empty when no context was used
};

NoiseGrad predict_noise_backward(const NoisePredictor& predictor,
                                 const ConsistencyNet& consistency, const NoiseCache& cache,
                                 const Tensor& d_noise, std::span<double> predictor_grads,
                                 std::span<double> consistency_grads, bool want_target_grad);

struct PassCache {
  NoiseCache noise;
  Direction direction = Direction::Extract;
  std::vector<std::uint8_t> in_range;  // 1 where the unclamped value was inside [0, 1]
};

/// clamp(target -/+ noise, 0, 1) with the sign chosen by direction.
Tensor generator_pass(const NoisePredictor& predictor, const ConsistencyNet& consistency,
                      const Tensor& target, const Tensor* context_map, Direction direction,
                      PassCache* cache = nullptr);

NoiseGrad generator_pass_backward(const NoisePredictor& predictor,
                                  const ConsistencyNet& consistency, const PassCache& cache,
                                  const Tensor& d_out, std::span<double> predictor_grads,
                                  std::span<double> consistency_grads, bool want_target_grad);

/// Context features for a slice, or an empty tensor when neighbours are disabled.
Tensor neighbor_context(const ConsistencyNet& consistency, const SliceContext& ctx);

/// P: fake full-dose slice.
Tensor denoise_P(const NoisePredictor& predictor, const ConsistencyNet& consistency,
                 const SliceContext& ctx);
/// P': fake low-dose slice.
Tensor add_noise_Pprime(const NoisePredictor& predictor, const ConsistencyNet& consistency,
                        const SliceContext& ctx);

/// Strided PatchGAN-style classifier with an unbounded score map.
class Discriminator {
 public:
  Discriminator() = default;
  Discriminator(std::size_t depth, std::size_t width, double slope = 0.2);

  void initialize(std::mt19937_64& rng);

  std::size_t depth() const noexcept { return layers_.size(); }
  ParamSet& params() noexcept { return params_; }
  const ParamSet& params() const noexcept { return params_; }

  struct Cache {
    std::vector<Tensor> inputs;
    std::vector<Tensor> pre;
  };
  Tensor forward(const Tensor& slice, Cache* cache = nullptr) const;
  Tensor backward(const Cache& cache, const Tensor& d_map, std::span<double> grads,
                  bool want_input_grad) const;

 private:
  double slope_ = 0.2;
  ParamSet params_;
  std::vector<Conv2d> layers_;
};

Tensor discriminate(const Discriminator& disc, const Tensor& slice);
/// Scalar D(x): mean over the patch-score map.
double mean_score(const Tensor& score_map);

struct ModelConfig {
  std::size_t predictor_depth = 8;
  std::size_t predictor_width = 32;
  std::size_t neighbor_k = 1;
  std::size_t consistency_width = 16;
  std::size_t discriminator_depth = 4;
  std::size_t discriminator_width = 16;
  FuseMode fuse_mode = FuseMode::ElementwiseAdd;

  void validate() const;
};

/// The four learnable components.
struct CycleModel {
  ModelConfig config;
  NoisePredictor predictor;
  ConsistencyNet consistency;
  Discriminator d_low;   // D_O
  Discriminator d_full;  // D_U

  static CycleModel create(const ModelConfig& config, std::uint64_t seed);
};

}  // namespace cdn
