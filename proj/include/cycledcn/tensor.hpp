// Copyright 2026 The cycledcn Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace cdn {

/// Dense (channels, height, width) array of doubles, channel-major.
/// A 2D slice is a tensor with one channel.
class Tensor {
 public:
  Tensor() = default;
  Tensor(std::size_t channels, std::size_t height, std::size_t width, double fill = 0.0);

  static Tensor zeros_like(const Tensor& other) {
    return Tensor(other.c_, other.h_, other.w_, 0.0);
  }

  std::size_t channels() const noexcept { return c_; }
  std::size_t height() const noexcept { return h_; }
  std::size_t width() const noexcept { return w_; }
  std::size_t plane() const noexcept { return h_ * w_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t c, std::size_t y, std::size_t x) {
    return data_[(c * h_ + y) * w_ + x];
  }
  double operator()(std::size_t c, std::size_t y, std::size_t x) const {
    return data_[(c * h_ + y) * w_ + x];
  }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  std::span<double> channel(std::size_t c) { return {data_.data() + c * plane(), plane()}; }
  std::span<const double> channel(std::size_t c) const {
    return {data_.data() + c * plane(), plane()};
  }

  /// Copy of a single channel as a one-channel tensor.
  Tensor channel_tensor(std::size_t c) const;

  bool same_shape(const Tensor& other) const noexcept {
    return c_ == other.c_ && h_ == other.h_ && w_ == other.w_;
  }
  bool same_plane(const Tensor& other) const noexcept {
    return h_ == other.h_ && w_ == other.w_;
  }

  Tensor& operator+=(const Tensor& other);
  Tensor& operator-=(const Tensor& other);
  Tensor& operator*=(double s);

  std::string shape_string() const;

 private:
  std::size_t c_ = 0;
  std::size_t h_ = 0;
  std::size_t w_ = 0;
  std::vector<double> data_;
};

Tensor operator+(Tensor a, const Tensor& b);
Tensor operator-(Tensor a, const Tensor& b);

/// Concatenate tensors of equal plane size along the channel axis.
Tensor concat_channels(std::span<const Tensor> parts);

/// Throws ValidationError naming `what` when the two tensors differ in shape.
void require_same_shape(const Tensor& a, const Tensor& b, const char* what);

}  // namespace cdn
