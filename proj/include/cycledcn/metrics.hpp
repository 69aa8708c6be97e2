// Copyright 2026 The cycledcn Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cycledcn/ssim.hpp"
#include "cycledcn/volume.hpp"

namespace cdn {

// Image-quality metrics. Volume overloads treat the data as one flat array
// except ssim_index, which averages 2D SSIM over axial slices.

/// 10 log10(range^2 / MSE); +inf when the inputs are identical.
double psnr(std::span<const double> x, std::span<const double> ref, double data_range = 1.0);
double psnr(const Volume& x, const Volume& ref, double data_range = 1.0);

double ssim_index(const Volume& x, const Volume& ref, double data_range = 1.0);

/// ||x - ref|| / ||ref||.
double nrmse(std::span<const double> x, std::span<const double> ref);
double nrmse(const Volume& x, const Volume& ref);

struct RoiMasks {
  Shape3 shape;
  std::vector<std::uint8_t> tumor;
  std::vector<std::uint8_t> background;

  std::size_t tumor_count() const;
  std::size_t background_count() const;
};

/// Tumor: voxels of the box at or above threshold_frac * (box max).
/// Background: the shell of shell_width voxels around the box.
RoiMasks segment_rois(const Volume& v, const Box3& tumor_box, double threshold_frac = 0.5,
                      std::size_t shell_width = 3);

/// |mean_t - mean_b| / std_b with the population standard deviation.
double cnr(const Volume& v, const RoiMasks& masks);

/// Per-slice Sobel gradient magnitude (replicated border), row-major.
std::vector<double> sobel_magnitude(std::span<const double> img, std::size_t h, std::size_t w);

/// Sum |grad denoised| / sum |grad full| over all axial slices.
double epi(const Volume& denoised, const Volume& full);

struct EdgePoint {
  int row = 0;
  int col = 0;
  bool operator==(const EdgePoint&) const = default;
  auto operator<=>(const EdgePoint&) const = default;
};

struct EdgeSet {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<EdgePoint> points;  // sorted row-major, unique
};

struct CannyOptions {
  double sigma = 1.0;
  double low_frac = 0.1;
  double high_frac = 0.2;
};

/// Gaussian smoothing, Sobel, non-maximum suppression and hysteresis with
/// thresholds relative to the maximum gradient magnitude.
EdgeSet canny_edges(std::span<const double> img, std::size_t h, std::size_t w,
                    const CannyOptions& options = {});
EdgeSet canny_edges(const Volume& v, std::size_t z, const CannyOptions& options = {});

/// Symmetric Hausdorff distance in pixels.
double hausdorff(const EdgeSet& a, const EdgeSet& b);
double hausdorff(std::span<const EdgePoint> a, std::span<const EdgePoint> b);

struct MetricsReport {
  std::string case_id;
  std::string model_id;
  std::string dose_fraction;
  double psnr = 0.0;
  double ssim = 0.0;
  double nrmse = 0.0;
  double epi = 0.0;
  std::optional<double> cnr;
  std::optional<double> hausdorff;
  std::size_t hausdorff_slice = 0;
};

struct EvaluateOptions {
  double data_range = 1.0;
  std::optional<Box3> tumor_box;
  std::optional<std::size_t> hausdorff_slice;  // central slice when unset
  CannyOptions canny;
  double threshold_frac = 0.5;
  std::size_t shell_width = 3;
};

/// Metrics of `denoised` against `full`. ROIs are segmented on `full` and
/// applied to `denoised`; `low` is only checked for alignment.
MetricsReport evaluate_case(const Volume& denoised, const Volume& low, const Volume& full,
                            const EvaluateOptions& options = {});

struct Stat {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation, 0 for a single value
  std::size_t count = 0;
};

Stat summarize(std::span<const double> values);

struct ReportSummary {
  Stat psnr, ssim, nrmse, epi, cnr, hausdorff;
};

/// Means and standard deviations per metric. Missing optional values are
/// skipped; an infinite PSNR makes the PSNR mean infinite.
ReportSummary summarize(std::span<const MetricsReport> reports);

struct TTestResult {
  double t = 0.0;
  double dof = 0.0;
  double p_value = 1.0;  // two-sided
};

/// Paired Student t-test on a - b.
TTestResult paired_t_test(std::span<const double> a, std::span<const double> b);

}  // namespace cdn
