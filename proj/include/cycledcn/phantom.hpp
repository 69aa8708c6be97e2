// Copyright 2026 The cycledcn Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "cycledcn/volume.hpp"

namespace cdn {

/// Spherical lesion. Contrast < 1 is a cold lesion, > 1 a hot one.
struct Tumor {
  std::array<double, 3> center{};  // voxel coordinates (z, y, x)
  double radius = 4.0;             // voxels
  double contrast = 3.0;
};

/// Edge softness (voxels) of inserted tumors.
inline constexpr double kTumorEdgeSigma = 0.3;

struct PhantomSpec {
  Shape3 shape{64, 128, 128};
  Spacing3 spacing{2.0, 2.0, 2.0};
  std::uint64_t seed = 0;
  double background_activity = 1.0;
  double cortex_amplitude = 1.0;
  std::vector<Tumor> tumors;
  double smoothness = 1.0;  // Gaussian sigma in voxels, anatomy only

  void validate() const;
};

struct DoseFraction {
  double value = 1.0;
  std::string label = "1/1";

  /// Parses "1/4", "0.25" and the like.
  static DoseFraction parse(const std::string& text);
  void validate() const;
  /// Label usable in file names ("1/4" -> "1-4").
  std::string file_tag() const;
};

DoseFraction quarter_dose();
DoseFraction tenth_dose();
DoseFraction twenty_fourth_dose();

/// Noise-free full-dose brain phantom. Pure function of the spec.
Volume generate_phantom(const PhantomSpec& spec);

/// Image-space count thinning: each voxel becomes Poisson(v * c * f) / (c * f),
/// where c is counts_per_unit and f the dose fraction.
Volume simulate_low_dose(const Volume& full, const DoseFraction& fraction, double counts_per_unit,
                         std::uint64_t seed);

struct IntensityScale {
  double min = 0.0;
  double max = 1.0;
};

std::pair<Volume, IntensityScale> min_max_normalize(const Volume& v);

/// (v - min) / (max - min); optionally clamped into [0, 1].
Volume apply_scale(const Volume& v, const IntensityScale& scale, bool clamp);
Volume denormalize(const Volume& v, const IntensityScale& scale);

/// Tight voxel box around a tumor's sphere, clipped to the volume.
Box3 tumor_box(const Tumor& tumor, const Shape3& shape, double margin = 0.0);

/// Spec with seed-dependent tumor placement inside the brain.
PhantomSpec random_phantom_spec(const PhantomSpec& base, std::uint64_t seed, int tumor_count,
                                double tumor_contrast, double min_radius, double max_radius);

}  // namespace cdn
