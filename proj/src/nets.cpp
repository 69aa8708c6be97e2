// Copyright 2026 The cycledcn Authors.
// SPDX-License-Identifier: Apache-2.0

#include "cycledcn/nets.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "cycledcn/error.hpp"

namespace cdn {

std::string to_string(FuseMode mode) {
  return mode == FuseMode::Network ? "network" : "elementwise_add";
}

FuseMode parse_fuse_mode(const std::string& text) {
  if (text == "elementwise_add" || text == "add") return FuseMode::ElementwiseAdd;
  if (text == "network") return FuseMode::Network;
  throw ValidationError("unknown fuse mode '" + text + "' (expected elementwise_add or network)");
}

void SliceContext::validate() const {
  if (target.channels() != 1 || target.empty()) {
    throw ValidationError("slice context target must be a non-empty single-channel slice");
  }
  if (!neighbors.empty()) {
    if (neighbors.channels() % 2 != 0) {
      throw ValidationError("slice context must hold an even number (2k) of neighbours");
    }
    if (!neighbors.same_plane(target)) {
      throw ValidationError("slice context neighbours " + neighbors.shape_string() +
                            " do not match target " + target.shape_string());
    }
  }
  const auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!std::all_of(target.data().begin(), target.data().end(), in_unit) ||
      !std::all_of(neighbors.data().begin(), neighbors.data().end(), in_unit)) {
    throw ValidationError("slice context values must lie in [0, 1]");
  }
}

// ---------------------------------------------------------------------------

NoisePredictor::NoisePredictor(std::size_t depth, std::size_t width) : depth_(depth), width_(width) {
  if (depth < 2) throw ValidationError("noise predictor depth must be >= 2");
  if (width < 1) throw ValidationError("noise predictor width must be >= 1");
  head_ = Conv2d::create(params_, "head", 2, width, 3, 1, 1);
  for (std::size_t i = 0; i + 2 < depth; ++i) {
    body_.push_back(Conv2d::create(params_, "body" + std::to_string(i), width, width, 3, 1, 1));
  }
  tail_ = Conv2d::create(params_, "tail", width, 1, 3, 1, 1);
}

void NoisePredictor::initialize(std::mt19937_64& rng) {
  auto p = params_.values();
  head_.init_he(p, rng);
  for (const auto& layer : body_) layer.init_he(p, rng);
  tail_.init_zero(p);
}

ConsistencyNet::ConsistencyNet(std::size_t neighbor_k, std::size_t hidden,
                               std::size_t feature_width, FuseMode mode)
    : k_(neighbor_k), hidden_(hidden), feature_width_(feature_width), mode_(mode) {
  if (k_ == 0) return;
  if (hidden < 1 || feature_width < 1) throw ValidationError("consistency widths must be >= 1");
  enc1_ = Conv2d::create(params_, "enc1", 2 * k_, hidden, 3, 1, 1);
  enc2_ = Conv2d::create(params_, "enc2", hidden, hidden, 3, 1, 1);
  enc3_ = Conv2d::create(params_, "enc3", hidden, feature_width, 3, 1, 1);
  if (mode_ == FuseMode::Network) {
    fusion_ = Conv2d::create(params_, "fusion", 2 * feature_width, feature_width, 1, 1, 0);
  }
}

void ConsistencyNet::initialize(std::mt19937_64& rng) {
  if (!enabled()) return;
  auto p = params_.values();
  enc1_.init_he(p, rng);
  enc2_.init_he(p, rng);
  enc3_.init_he(p, rng, 0.5);
  if (mode_ == FuseMode::Network) set_identity_fusion();
}

void ConsistencyNet::set_identity_fusion() {
  if (!enabled() || mode_ != FuseMode::Network) return;
  auto p = params_.values();
  fusion_.init_zero(p);
  const std::size_t w = feature_width_;
  for (std::size_t o = 0; o < w; ++o) {
    p[fusion_.weight_offset + o * 2 * w + o] = 1.0;
    p[fusion_.weight_offset + o * 2 * w + w + o] = 1.0;
  }
}

Tensor ConsistencyNet::encode(const Tensor& neighbors, EncodeCache* cache) const {
  if (!enabled()) return {};
  if (neighbors.channels() != 2 * k_) {
    throw ValidationError("consistency net expects " + std::to_string(2 * k_) +
                          " neighbour slices, got " + neighbors.shape_string());
  }
  auto p = params_.values();
  Tensor pre1 = enc1_.forward(p, neighbors);
  Tensor post1 = relu(pre1);
  Tensor pre2 = enc2_.forward(p, post1);
  Tensor post2 = relu(pre2);
  Tensor out = enc3_.forward(p, post2);
  if (cache) {
    cache->input = neighbors;
    cache->pre1 = std::move(pre1);
    cache->post1 = std::move(post1);
    cache->pre2 = std::move(pre2);
    cache->post2 = std::move(post2);
  }
  return out;
}

void ConsistencyNet::encode_backward(const EncodeCache& cache, const Tensor& d_context,
                                     std::span<double> grads) const {
  if (!enabled() || grads.empty()) return;
  auto p = params_.values();
  Tensor d = enc3_.backward(p, cache.post2, d_context, grads, true);
  d = relu_backward(cache.pre2, d);
  d = enc2_.backward(p, cache.post1, d, grads, true);
  d = relu_backward(cache.pre1, d);
  enc1_.backward(p, cache.input, d, grads, false);
}

Tensor fuse_neighbors(const Tensor& target_features, const Tensor& neighbor_context, FuseMode mode,
                      const ConsistencyNet* net) {
  require_same_shape(target_features, neighbor_context, "fuse_neighbors");
  if (mode == FuseMode::ElementwiseAdd) return target_features + neighbor_context;
  if (net == nullptr || !net->enabled() || net->fuse_mode() != FuseMode::Network) {
    throw ValidationError("network fusion requires a consistency net built in network mode");
  }
  const std::array<Tensor, 2> parts{target_features, neighbor_context};
  return net->fusion().forward(net->params().values(), concat_channels(parts));
}

// ---------------------------------------------------------------------------

Tensor predict_noise(const NoisePredictor& predictor, const ConsistencyNet& consistency,
                     const Tensor& target, const Tensor* context_map, Direction direction,
                     NoiseCache* cache) {
  if (target.channels() != 1 || target.empty()) {
    throw ValidationError("predict_noise: target must be a single-channel slice, got " +
                          target.shape_string());
  }
  const bool use_context = context_map != nullptr && !context_map->empty();
  if (use_context && (!context_map->same_plane(target) ||
                      context_map->channels() != predictor.width())) {
    throw ValidationError("predict_noise: context map " + context_map->shape_string() +
                          " does not match target " + target.shape_string() + " with width " +
                          std::to_string(predictor.width()));
  }
  auto p = predictor.params().values();

  const std::array<Tensor, 2> parts{
      target, Tensor(1, target.height(), target.width(), direction == Direction::Add ? 1.0 : 0.0)};
  Tensor input = concat_channels(parts);
  Tensor head = predictor.head().forward(p, input);
  Tensor fused = use_context ? fuse_neighbors(head, *context_map, consistency.fuse_mode(),
                                              &consistency)
                             : head;

  std::vector<Tensor> pre, post;
  pre.reserve(predictor.body().size() + 1);
  post.reserve(predictor.body().size() + 1);
  post.push_back(relu(fused));
  pre.push_back(std::move(fused));
  for (const auto& layer : predictor.body()) {
    Tensor z = layer.forward(p, post.back());
    post.push_back(relu(z));
    pre.push_back(std::move(z));
  }
  Tensor noise = predictor.tail().forward(p, post.back());
  if (cache) {
    cache->input = std::move(input);
    cache->head = std::move(head);
    cache->fused = use_context;
    cache->context = use_context ? *context_map : Tensor{};
    cache->pre = std::move(pre);
    cache->post = std::move(post);
  }
  return noise;
}

Tensor predict_noise(const NoisePredictor& predictor, const ConsistencyNet& consistency,
                     const SliceContext& ctx, const Tensor* context_map, Direction direction) {
  return predict_noise(predictor, consistency, ctx.target, context_map, direction, nullptr);
}

NoiseGrad predict_noise_backward(const NoisePredictor& predictor,
                                 const ConsistencyNet& consistency, const NoiseCache& cache,
                                 const Tensor& d_noise, std::span<double> predictor_grads,
                                 std::span<double> consistency_grads, bool want_target_grad) {
  auto p = predictor.params().values();
  Tensor d = predictor.tail().backward(p, cache.post.back(), d_noise, predictor_grads, true);
  for (std::size_t i = predictor.body().size(); i-- > 0;) {
    d = relu_backward(cache.pre[i + 1], d);
    d = predictor.body()[i].backward(p, cache.post[i], d, predictor_grads, true);
  }
  d = relu_backward(cache.pre[0], d);

  NoiseGrad out;
  Tensor d_head;
  if (!cache.fused) {
    d_head = std::move(d);
  } else if (consistency.fuse_mode() == FuseMode::ElementwiseAdd) {
    out.context = d;
    d_head = std::move(d);
  } else {
    const std::array<Tensor, 2> parts{cache.head, cache.context};
    Tensor d_stacked = consistency.fusion().backward(consistency.params().values(),
                                                     concat_channels(parts), d,
                                                     consistency_grads, true);
    const std::size_t w = cache.head.channels();
    d_head = Tensor(w, d.height(), d.width());
    out.context = Tensor(w, d.height(), d.width());
    const std::size_t half = w * d.plane();
    std::copy_n(d_stacked.data().begin(), half, d_head.data().begin());
    std::copy_n(d_stacked.data().begin() + half, half, out.context.data().begin());
  }
  Tensor d_input = predictor.head().backward(p, cache.input, d_head, predictor_grads,
                                             want_target_grad);
  if (want_target_grad) out.target = d_input.channel_tensor(0);
  return out;
}

Tensor generator_pass(const NoisePredictor& predictor, const ConsistencyNet& consistency,
                      const Tensor& target, const Tensor* context_map, Direction direction,
                      PassCache* cache) {
  Tensor noise = predict_noise(predictor, consistency, target, context_map, direction,
                               cache ? &cache->noise : nullptr);
  const double sign = direction == Direction::Extract ? -1.0 : 1.0;
  Tensor out = target;
  if (cache) {
    cache->direction = direction;
    cache->in_range.assign(out.size(), 0);
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double v = target[i] + sign * noise[i];
    const bool inside = v >= 0.0 && v <= 1.0;
    if (cache) cache->in_range[i] = inside ? 1 : 0;
    out[i] = inside ? v : (v < 0.0 ? 0.0 : 1.0);
  }
  return out;
}

NoiseGrad generator_pass_backward(const NoisePredictor& predictor,
                                  const ConsistencyNet& consistency, const PassCache& cache,
                                  const Tensor& d_out, std::span<double> predictor_grads,
                                  std::span<double> consistency_grads, bool want_target_grad) {
  const double sign = cache.direction == Direction::Extract ? -1.0 : 1.0;
  Tensor g = d_out;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!cache.in_range[i]) g[i] = 0.0;
  }
  Tensor d_noise = g;
  d_noise *= sign;
  NoiseGrad out = predict_noise_backward(predictor, consistency, cache.noise, d_noise,
                                         predictor_grads, consistency_grads, want_target_grad);
  if (want_target_grad) out.target += g;
  return out;
}

Tensor neighbor_context(const ConsistencyNet& consistency, const SliceContext& ctx) {
  if (!consistency.enabled() || ctx.neighbors.empty()) return {};
  return consistency.encode(ctx.neighbors);
}

Tensor denoise_P(const NoisePredictor& predictor, const ConsistencyNet& consistency,
                 const SliceContext& ctx) {
  const Tensor context = neighbor_context(consistency, ctx);
  return generator_pass(predictor, consistency, ctx.target, &context, Direction::Extract);
}

Tensor add_noise_Pprime(const NoisePredictor& predictor, const ConsistencyNet& consistency,
                        const SliceContext& ctx) {
  const Tensor context = neighbor_context(consistency, ctx);
  return generator_pass(predictor, consistency, ctx.target, &context, Direction::Add);
}

// ---------------------------------------------------------------------------

Discriminator::Discriminator(std::size_t depth, std::size_t width, double slope) : slope_(slope) {
  if (depth < 2) throw ValidationError("discriminator depth must be >= 2");
  if (width < 1) throw ValidationError("discriminator width must be >= 1");
  std::size_t in = 1;
  for (std::size_t i = 0; i + 1 < depth; ++i) {
    const std::size_t out = i == 0 ? width : 2 * width;
    const std::size_t stride = i < 2 ? 2 : 1;
    layers_.push_back(Conv2d::create(params_, "conv" + std::to_string(i), in, out, 3, stride, 1));
    in = out;
  }
  layers_.push_back(Conv2d::create(params_, "score", in, 1, 3, 1, 1));
}

void Discriminator::initialize(std::mt19937_64& rng) {
  auto p = params_.values();
  const double gain = 1.0 / std::sqrt(1.0 + slope_ * slope_);
  for (const auto& layer : layers_) layer.init_he(p, rng, gain);
}

Tensor Discriminator::forward(const Tensor& slice, Cache* cache) const {
  if (slice.channels() != 1 || slice.empty()) {
    throw ValidationError("discriminator expects a single-channel slice, got " +
                          slice.shape_string());
  }
  auto p = params_.values();
  if (cache) {
    cache->inputs.clear();
    cache->pre.clear();
  }
  Tensor x = slice;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    Tensor z = layers_[i].forward(p, x);
    if (cache) cache->inputs.push_back(std::move(x));
    if (i + 1 == layers_.size()) return z;
    x = leaky_relu(z, slope_);
    if (cache) cache->pre.push_back(std::move(z));
  }
  return x;
}

Tensor Discriminator::backward(const Cache& cache, const Tensor& d_map, std::span<double> grads,
                               bool want_input_grad) const {
  auto p = params_.values();
  Tensor d = d_map;
  for (std::size_t i = layers_.size(); i-- > 0;) {
    if (i + 1 < layers_.size()) d = leaky_relu_backward(cache.pre[i], d, slope_);
    const bool need_dx = i > 0 || want_input_grad;
    d = layers_[i].backward(p, cache.inputs[i], d, grads, need_dx);
    if (!need_dx) return {};
  }
  return d;
}

Tensor discriminate(const Discriminator& disc, const Tensor& slice) { return disc.forward(slice); }

double mean_score(const Tensor& score_map) {
  double s = 0.0;
  for (double v : score_map.data()) s += v;
  return score_map.empty() ? 0.0 : s / static_cast<double>(score_map.size());
}

// ---------------------------------------------------------------------------

void ModelConfig::validate() const {
  if (predictor_depth < 2) throw ValidationError("predictor_depth must be >= 2");
  if (predictor_width < 1) throw ValidationError("predictor_width must be >= 1");
  if (consistency_width < 1) throw ValidationError("consistency_width must be >= 1");
  if (discriminator_depth < 2) throw ValidationError("discriminator_depth must be >= 2");
  if (discriminator_width < 1) throw ValidationError("discriminator_width must be >= 1");
}

CycleModel CycleModel::create(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  std::mt19937_64 rng(seed);
  CycleModel m{config,
               NoisePredictor(config.predictor_depth, config.predictor_width),
               ConsistencyNet(config.neighbor_k, config.consistency_width,
                              config.predictor_width, config.fuse_mode),
               Discriminator(config.discriminator_depth, config.discriminator_width),
               Discriminator(config.discriminator_depth, config.discriminator_width)};
  m.predictor.initialize(rng);
  m.consistency.initialize(rng);
  m.d_low.initialize(rng);
  m.d_full.initialize(rng);
  return m;
}

}  // namespace cdn
