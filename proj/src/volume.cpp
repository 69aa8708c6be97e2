// Copyright 2026 The cycledcn Authors.
// SPDX-License-Identifier: Apache-2.0

#include "cycledcn/volume.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "cycledcn/error.hpp"

namespace cdn {

std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string Shape3::to_string() const {
  return "(" + std::to_string(nz) + ", " + std::to_string(ny) + ", " + std::to_string(nx) + ")";
}

namespace {

void check_spacing(const Spacing3& s) {
  if (!(s.dz > 0.0) || !(s.dy > 0.0) || !(s.dx > 0.0) || !std::isfinite(s.dz) ||
      !std::isfinite(s.dy) || !std::isfinite(s.dx)) {
    throw ValidationError("volume spacing components must be finite and > 0");
  }
}

}  // namespace

Volume::Volume(Shape3 shape, Spacing3 spacing, float fill) : shape_(shape), spacing_(spacing) {
  if (shape.nz < 1 || shape.ny < 1 || shape.nx < 1) {
    throw ValidationError("volume shape components must be >= 1, got " + shape.to_string());
  }
  check_spacing(spacing);
  data_.assign(shape.count(), fill);
}

void Volume::set_spacing(Spacing3 spacing) {
  check_spacing(spacing);
  spacing_ = spacing;
}

Tensor Volume::slice(std::size_t z) const {
  if (z >= shape_.nz) throw ValidationError("slice index out of range");
  Tensor out(1, shape_.ny, shape_.nx);
  const float* src = data_.data() + z * shape_.ny * shape_.nx;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = src[i];
  return out;
}

void Volume::set_slice(std::size_t z, const Tensor& slice) {
  if (z >= shape_.nz) throw ValidationError("slice index out of range");
  if (slice.channels() != 1 || slice.height() != shape_.ny || slice.width() != shape_.nx) {
    throw ValidationError("set_slice: slice shape " + slice.shape_string() +
                          " does not match volume plane " + shape_.to_string());
  }
  float* dst = data_.data() + z * shape_.ny * shape_.nx;
  for (std::size_t i = 0; i < slice.size(); ++i) dst[i] = static_cast<float>(slice[i]);
}

void Volume::require_finite_nonnegative(const char* what) const {
  for (std::size_t i = 0; i < data_.size(); ++i) {
    const float v = data_[i];
    if (!std::isfinite(v) || v < 0.0f) {
      throw ValidationError(std::string(what) + ": voxel " + std::to_string(i) +
                            " is negative or non-finite");
    }
  }
}

float Volume::min_value() const { return *std::min_element(data_.begin(), data_.end()); }
float Volume::max_value() const { return *std::max_element(data_.begin(), data_.end()); }

void require_same_shape(const Volume& a, const Volume& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw ValidationError(std::string(what) + ": shape mismatch " + a.shape().to_string() +
                          " vs " + b.shape().to_string());
  }
}

}  // namespace cdn
