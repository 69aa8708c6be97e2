// Copyright 2026 The cycledcn Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace cdn {

/// Gaussian-window SSIM (window 11, sigma 1.5, K1 0.01, K2 0.03). The map is
/// evaluated only where the window fits entirely inside the image.
struct SsimOptions {
  std::size_t window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double data_range = 1.0;
};

std::vector<double> gaussian_window(const SsimOptions& options);

/// Mean SSIM of two row-major h x w images. Throws ValidationError when the
/// image is smaller than the window.
double ssim_2d(std::span<const double> x, std::span<const double> y, std::size_t h, std::size_t w,
               const SsimOptions& options = {});

/// As ssim_2d, and writes d(mean SSIM)/dx into grad_x (size h*w, overwritten).
double ssim_2d_grad(std::span<const double> x, std::span<const double> y, std::size_t h,
                    std::size_t w, std::span<double> grad_x, const SsimOptions& options = {});

/// Mean of the contrast-structure factor (2 s_xy + C2) / (s_x + s_y + C2).
double ssim_cs_2d(std::span<const double> x, std::span<const double> y, std::size_t h,
                  std::size_t w, const SsimOptions& options = {});

}  // namespace cdn
