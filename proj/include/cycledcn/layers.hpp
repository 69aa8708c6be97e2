// Copyright 2026 The cycledcn Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "cycledcn/tensor.hpp"

namespace cdn {

struct ParamBlock {
  std::string name;
  std::size_t offset = 0;
  std::size_t size = 0;
};

/// Flat parameter vector partitioned into named blocks. Gradients and optimizer
/// moments are plain vectors of the same length.
class ParamSet {
 public:
  std::size_t add(std::string name, std::size_t count);

  std::size_t size() const noexcept { return values_.size(); }
  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }
  const std::vector<ParamBlock>& blocks() const noexcept { return blocks_; }
  std::span<double> block(std::size_t i) { return {values_.data() + blocks_[i].offset, blocks_[i].size}; }

  std::vector<double> zeros() const { return std::vector<double>(values_.size(), 0.0); }
  bool all_finite() const;

 private:
  std::vector<ParamBlock> blocks_;
  std::vector<double> values_;
};

/// 2D convolution with square kernels. Weights are stored (out, in, k, k).
struct Conv2d {
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  std::size_t kernel = 3;
  std::size_t stride = 1;
  std::size_t pad = 1;
  std::size_t weight_offset = 0;
  std::size_t bias_offset = 0;

  static Conv2d create(ParamSet& params, const std::string& name, std::size_t in,
                       std::size_t out, std::size_t kernel, std::size_t stride, std::size_t pad);

  std::size_t out_size(std::size_t n) const { return (n + 2 * pad - kernel) / stride + 1; }
  std::size_t weight_count() const { return out_channels * in_channels * kernel * kernel; }

  Tensor forward(std::span<const double> params, const Tensor& x) const;

  /// Accumulates parameter gradients into `grads` (skipped when empty) and
  /// returns d/dx when `want_input_grad` is set.
  Tensor backward(std::span<const double> params, const Tensor& x, const Tensor& grad_out,
                  std::span<double> grads, bool want_input_grad) const;

  /// He-normal weights scaled by `gain`, zero bias.
  void init_he(std::span<double> params, std::mt19937_64& rng, double gain = 1.0) const;
  void init_zero(std::span<double> params) const;
};

Tensor relu(const Tensor& x);
/// Multiplies grad by the ReLU derivative evaluated at the pre-activation.
Tensor relu_backward(const Tensor& pre, const Tensor& grad);

Tensor leaky_relu(const Tensor& x, double slope);
Tensor leaky_relu_backward(const Tensor& pre, const Tensor& grad, double slope);

}  // namespace cdn
