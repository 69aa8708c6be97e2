// Copyright 2026 The cycledcn Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "cycledcn/tensor.hpp"

namespace cdn {

struct Shape3 {
  std::size_t nz = 1;
  std::size_t ny = 1;
  std::size_t nx = 1;

  std::size_t count() const noexcept { return nz * ny * nx; }
  bool operator==(const Shape3&) const = default;
  std::string to_string() const;
};

/// Voxel spacing in millimetres.
struct Spacing3 {
  double dz = 1.0;
  double dy = 1.0;
  double dx = 1.0;
  bool operator==(const Spacing3&) const = default;
};

/// Half-open voxel box [z0, z1) x [y0, y1) x [x0, x1).
struct Box3 {
  std::size_t z0 = 0, y0 = 0, x0 = 0;
  std::size_t z1 = 0, y1 = 0, x1 = 0;

  bool empty() const noexcept { return z1 <= z0 || y1 <= y0 || x1 <= x0; }
  bool within(const Shape3& s) const noexcept { return z1 <= s.nz && y1 <= s.ny && x1 <= s.nx; }
  bool contains(std::size_t z, std::size_t y, std::size_t x) const noexcept {
    return z >= z0 && z < z1 && y >= y0 && y < y1 && x >= x0 && x < x1;
  }
  bool operator==(const Box3&) const = default;
};

using Metadata = std::map<std::string, std::string>;

/// Round-trippable text form of a double for metadata values.
std::string format_real(double v);

/// 3D scalar image in z-major order with spacing and free-form metadata.
class Volume {
 public:
  Volume() = default;
  explicit Volume(Shape3 shape, Spacing3 spacing = {}, float fill = 0.0f);

  const Shape3& shape() const noexcept { return shape_; }
  const Spacing3& spacing() const noexcept { return spacing_; }
  void set_spacing(Spacing3 spacing);

  Metadata& meta() noexcept { return meta_; }
  const Metadata& meta() const noexcept { return meta_; }

  std::span<float> data() noexcept { return data_; }
  std::span<const float> data() const noexcept { return data_; }
  std::size_t size() const noexcept { return data_.size(); }

  std::size_t index(std::size_t z, std::size_t y, std::size_t x) const noexcept {
    return (z * shape_.ny + y) * shape_.nx + x;
  }
  float& at(std::size_t z, std::size_t y, std::size_t x) noexcept { return data_[index(z, y, x)]; }
  float at(std::size_t z, std::size_t y, std::size_t x) const noexcept {
    return data_[index(z, y, x)];
  }

  /// Axial slice z as a one-channel tensor.
  Tensor slice(std::size_t z) const;
  void set_slice(std::size_t z, const Tensor& slice);

  /// Throws ValidationError unless every voxel is finite and non-negative.
  void require_finite_nonnegative(const char* what) const;

  float min_value() const;
  float max_value() const;

 private:
  Shape3 shape_{};
  Spacing3 spacing_{};
  Metadata meta_;
  std::vector<float> data_;
};

void require_same_shape(const Volume& a, const Volume& b, const char* what);

}  // namespace cdn
