// Copyright 2026 The cycledcn Authors.
// SPDX-License-Identifier: Apache-2.0

#include "cycledcn/tensor.hpp"

#include <algorithm>

#include "cycledcn/error.hpp"

namespace cdn {

Tensor::Tensor(std::size_t channels, std::size_t height, std::size_t width, double fill)
    : c_(channels), h_(height), w_(width), data_(channels * height * width, fill) {}

Tensor Tensor::channel_tensor(std::size_t c) const {
  Tensor out(1, h_, w_);
  auto src = channel(c);
  std::copy(src.begin(), src.end(), out.data_.begin());
  return out;
}

Tensor& Tensor::operator+=(const Tensor& other) {
  require_same_shape(*this, other, "tensor +=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Tensor& Tensor::operator-=(const Tensor& other) {
  require_same_shape(*this, other, "tensor -=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

Tensor& Tensor::operator*=(double s) {
  for (double& v : data_) v *= s;
  return *this;
}

std::string Tensor::shape_string() const {
  return "(" + std::to_string(c_) + ", " + std::to_string(h_) + ", " + std::to_string(w_) + ")";
}

Tensor operator+(Tensor a, const Tensor& b) {
  a += b;
  return a;
}

Tensor operator-(Tensor a, const Tensor& b) {
  a -= b;
  return a;
}

Tensor concat_channels(std::span<const Tensor> parts) {
  if (parts.empty()) return {};
  std::size_t channels = 0;
  for (const auto& p : parts) {
    if (!p.same_plane(parts.front())) {
      throw ValidationError("concat_channels: plane mismatch " + p.shape_string() + " vs " +
                            parts.front().shape_string());
    }
    channels += p.channels();
  }
  Tensor out(channels, parts.front().height(), parts.front().width());
  auto dst = out.data().begin();
  for (const auto& p : parts) dst = std::copy(p.data().begin(), p.data().end(), dst);
  return out;
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (!a.same_shape(b)) {
    throw ValidationError(std::string(what) + ": shape mismatch " + a.shape_string() + " vs " +
                          b.shape_string());
  }
}

}  // namespace cdn
