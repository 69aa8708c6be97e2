// Copyright 2026 The cycledcn Authors.
// SPDX-License-Identifier: Apache-2.0

#include "cycledcn/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "cycledcn/error.hpp"

namespace cdn {
namespace {

// Nominal head semi-axes as fractions of the half extents (z, y, x).
constexpr std::array<double, 3> kHeadAxes{0.85, 0.82, 0.68};
constexpr double kAxisJitter = 0.03;
constexpr double kRibbonOuter = 0.97;

struct Anatomy {
  std::array<double, 3> axes{};  // semi-axes in voxels
  std::array<double, 3> center{};
  double gyri_theta = 7.0;
  double gyri_phi = 6.0;
  double phase_theta = 0.0;
  double phase_phi = 0.0;
};

Anatomy draw_anatomy(const PhantomSpec& spec) {
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> jitter(-kAxisJitter, kAxisJitter);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  std::uniform_int_distribution<int> freq(5, 9);

  Anatomy a;
  const std::array<double, 3> half{spec.shape.nz / 2.0, spec.shape.ny / 2.0, spec.shape.nx / 2.0};
  for (int i = 0; i < 3; ++i) a.axes[i] = (kHeadAxes[i] + jitter(rng)) * half[i];
  a.center = {(spec.shape.nz - 1) / 2.0, (spec.shape.ny - 1) / 2.0, (spec.shape.nx - 1) / 2.0};
  a.gyri_theta = freq(rng);
  a.gyri_phi = freq(rng);
  a.phase_theta = phase(rng);
  a.phase_phi = phase(rng);
  return a;
}

double ellipsoid_inside(double u, double v, double w, double cu, double cv, double cw, double ru,
                        double rv, double rw) {
  const double du = (u - cu) / ru, dv = (v - cv) / rv, dw = (w - cw) / rw;
  return du * du + dv * dv + dw * dw <= 1.0 ? 1.0 : 0.0;
}

std::vector<double> gaussian_kernel(double sigma) {
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
    sum += k[i + radius];
  }
  for (double& v : k) v /= sum;
  return k;
}

// Zero-padded separable blur along one axis of a z-major buffer.
void blur_axis(std::vector<double>& buf, const Shape3& s, int axis, const std::vector<double>& k) {
  const int radius = static_cast<int>(k.size() / 2);
  const std::size_t n = axis == 0 ? s.nz : axis == 1 ? s.ny : s.nx;
  const std::size_t stride = axis == 0 ? s.ny * s.nx : axis == 1 ? s.nx : 1;
  std::vector<double> line(n), out(n);
  const std::size_t outer = s.count() / n;
  for (std::size_t o = 0; o < outer; ++o) {
    std::size_t base;
    if (axis == 0) {
      base = o;
    } else if (axis == 1) {
      base = (o / s.nx) * s.ny * s.nx + (o % s.nx);
    } else {
      base = o * s.nx;
    }
    for (std::size_t i = 0; i < n; ++i) line[i] = buf[base + i * stride];
    for (std::size_t i = 0; i < n; ++i) {
      double acc = 0.0;
      for (int t = -radius; t <= radius; ++t) {
        const auto j = static_cast<std::ptrdiff_t>(i) + t;
        if (j < 0 || j >= static_cast<std::ptrdiff_t>(n)) continue;
        acc += k[t + radius] * line[j];
      }
      out[i] = acc;
    }
    for (std::size_t i = 0; i < n; ++i) buf[base + i * stride] = out[i];
  }
}

}  // namespace

void PhantomSpec::validate() const {
  if (shape.nz < 1 || shape.ny < 1 || shape.nx < 1) {
    throw ValidationError("phantom shape components must be >= 1");
  }
  if (!(background_activity > 0.0) || !std::isfinite(background_activity)) {
    throw ValidationError("background_activity must be positive");
  }
  if (!(cortex_amplitude >= 0.0) || !std::isfinite(cortex_amplitude)) {
    throw ValidationError("cortex_amplitude must be non-negative");
  }
  if (!(smoothness >= 0.0) || !std::isfinite(smoothness)) {
    throw ValidationError("smoothness must be non-negative");
  }
  const std::array<std::size_t, 3> dims{shape.nz, shape.ny, shape.nx};
  for (std::size_t t = 0; t < tumors.size(); ++t) {
    const Tumor& tumor = tumors[t];
    if (!(tumor.contrast > 0.0)) {
      throw ValidationError("tumor " + std::to_string(t) + ": contrast must be > 0");
    }
    if (!(tumor.radius > 0.0)) {
      throw ValidationError("tumor " + std::to_string(t) + ": radius must be > 0");
    }
    for (int i = 0; i < 3; ++i) {
      const double lo = tumor.center[i] - tumor.radius;
      const double hi = tumor.center[i] + tumor.radius;
      if (lo < 0.0 || hi > static_cast<double>(dims[i] - 1)) {
        throw ValidationError("tumor " + std::to_string(t) + " lies outside the volume bounds");
      }
    }
  }
}

Volume generate_phantom(const PhantomSpec& spec) {
  spec.validate();
  const Anatomy a = draw_anatomy(spec);
  const Shape3& s = spec.shape;
  const double bg = spec.background_activity;
  const double amp = spec.cortex_amplitude;

  std::vector<double> buf(s.count(), 0.0);
  std::vector<std::uint8_t> head(s.count(), 0);
  for (std::size_t z = 0; z < s.nz; ++z) {
    const double u = (z - a.center[0]) / a.axes[0];
    for (std::size_t y = 0; y < s.ny; ++y) {
      const double v = (y - a.center[1]) / a.axes[1];
      for (std::size_t x = 0; x < s.nx; ++x) {
        const double w = (x - a.center[2]) / a.axes[2];
        const double rho = std::sqrt(u * u + v * v + w * w);
        if (rho > 1.0) continue;
        const std::size_t i = (z * s.ny + y) * s.nx + x;
        head[i] = 1;

        // Folding pattern: m in [0, 1], gyri where m is high, sulci where low.
        const double theta = std::atan2(v, w);
        const double phi = std::atan2(std::sqrt(v * v + w * w), u);
        const double m = 0.5 * (1.0 + std::sin(a.gyri_theta * theta + a.phase_theta) *
                                          std::sin(a.gyri_phi * phi + a.phase_phi));
        const double ribbon_inner = 0.80 - 0.08 * m;
        double uptake = 0.0;
        if (rho >= ribbon_inner && rho <= kRibbonOuter) uptake = 0.3 + 0.7 * m;
        // Deep grey nuclei.
        const double nuclei = std::max(ellipsoid_inside(u, v, w, 0.05, 0.10, 0.30, 0.22, 0.16, 0.12),
                                       ellipsoid_inside(u, v, w, 0.05, 0.10, -0.30, 0.22, 0.16, 0.12));
        uptake = std::max(uptake, 0.8 * nuclei);
        buf[i] = bg * (1.0 + amp * uptake);
      }
    }
  }

  if (spec.smoothness > 0.0) {
    const auto k = gaussian_kernel(spec.smoothness);
    for (int axis = 0; axis < 3; ++axis) blur_axis(buf, s, axis, k);
  }
  for (std::size_t i = 0; i < buf.size(); ++i) {
    if (!head[i]) buf[i] = 0.0;
  }

  for (const Tumor& t : spec.tumors) {
    const double reach = t.radius + 6.0 * kTumorEdgeSigma;
    const auto lo = [&](int i) {
      return static_cast<std::size_t>(std::max(0.0, std::floor(t.center[i] - reach)));
    };
    const auto hi = [&](int i, std::size_t n) {
      return static_cast<std::size_t>(std::min<double>(n - 1, std::ceil(t.center[i] + reach)));
    };
    for (std::size_t z = lo(0); z <= hi(0, s.nz); ++z) {
      for (std::size_t y = lo(1); y <= hi(1, s.ny); ++y) {
        for (std::size_t x = lo(2); x <= hi(2, s.nx); ++x) {
          const double dz = z - t.center[0], dy = y - t.center[1], dx = x - t.center[2];
          const double r = std::sqrt(dz * dz + dy * dy + dx * dx);
          const double inside = 0.5 * std::erfc((r - t.radius) / (std::numbers::sqrt2 * kTumorEdgeSigma));
          buf[(z * s.ny + y) * s.nx + x] *= 1.0 + (t.contrast - 1.0) * inside;
        }
      }
    }
  }

  Volume out(s, spec.spacing);
  auto data = out.data();
  for (std::size_t i = 0; i < buf.size(); ++i) data[i] = static_cast<float>(buf[i]);
  out.meta()["kind"] = "phantom";
  out.meta()["seed"] = std::to_string(spec.seed);
  out.meta()["tumor_count"] = std::to_string(spec.tumors.size());
  return out;
}

Volume simulate_low_dose(const Volume& full, const DoseFraction& fraction, double counts_per_unit,
                         std::uint64_t seed) {
  fraction.validate();
  if (!(counts_per_unit > 0.0) || !std::isfinite(counts_per_unit)) {
    throw ValidationError("counts_per_unit must be positive and finite");
  }
  full.require_finite_nonnegative("simulate_low_dose input");

  const double gain = counts_per_unit * fraction.value;
  std::mt19937_64 rng(seed);
  Volume out(full.shape(), full.spacing());
  out.meta() = full.meta();
  auto src = full.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) {
    const double mean = static_cast<double>(src[i]) * gain;
    if (mean <= 0.0) {
      dst[i] = 0.0f;
      continue;
    }
    std::poisson_distribution<std::int64_t> poisson(mean);
    dst[i] = static_cast<float>(static_cast<double>(poisson(rng)) / gain);
  }
  out.meta()["dose_fraction"] = fraction.label;
  out.meta()["counts_per_unit"] = format_real(counts_per_unit);
  out.meta()["noise_seed"] = std::to_string(seed);
  return out;
}

DoseFraction DoseFraction::parse(const std::string& text) {
  DoseFraction f;
  f.label = text;
  try {
    const auto slash = text.find('/');
    if (slash != std::string::npos) {
      std::size_t pos = 0;
      const double num = std::stod(text.substr(0, slash), &pos);
      if (pos != slash) throw std::invalid_argument(text);
      const std::string den_text = text.substr(slash + 1);
      const double den = std::stod(den_text, &pos);
      if (pos != den_text.size()) throw std::invalid_argument(text);
      f.value = num / den;
    } else {
      std::size_t pos = 0;
      f.value = std::stod(text, &pos);
      if (pos != text.size()) throw std::invalid_argument(text);
    }
  } catch (const std::logic_error&) {
    throw ValidationError("cannot parse dose fraction '" + text + "'");
  }
  f.validate();
  return f;
}

void DoseFraction::validate() const {
  if (!(value > 0.0 && value <= 1.0)) {
    throw ValidationError("dose fraction '" + label + "' must lie in (0, 1]");
  }
}

std::string DoseFraction::file_tag() const {
  std::string tag = label;
  std::replace(tag.begin(), tag.end(), '/', '-');
  return tag;
}

DoseFraction quarter_dose() { return {0.25, "1/4"}; }
DoseFraction tenth_dose() { return {0.1, "1/10"}; }
DoseFraction twenty_fourth_dose() { return {1.0 / 24.0, "1/24"}; }

std::pair<Volume, IntensityScale> min_max_normalize(const Volume& v) {
  const IntensityScale scale{v.min_value(), v.max_value()};
  if (!(scale.max > scale.min)) {
    throw ValidationError("min_max_normalize: degenerate intensity range (constant volume)");
  }
  Volume out = apply_scale(v, scale, false);
  return {std::move(out), scale};
}

Volume apply_scale(const Volume& v, const IntensityScale& scale, bool clamp) {
  if (!(scale.max > scale.min)) throw ValidationError("apply_scale: degenerate intensity range");
  Volume out(v.shape(), v.spacing());
  out.meta() = v.meta();
  const double range = scale.max - scale.min;
  auto src = v.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) {
    double t = (static_cast<double>(src[i]) - scale.min) / range;
    if (clamp) t = std::clamp(t, 0.0, 1.0);
    dst[i] = static_cast<float>(t);
  }
  out.meta()["norm_min"] = format_real(scale.min);
  out.meta()["norm_max"] = format_real(scale.max);
  return out;
}

Volume denormalize(const Volume& v, const IntensityScale& scale) {
  Volume out(v.shape(), v.spacing());
  out.meta() = v.meta();
  const double range = scale.max - scale.min;
  auto src = v.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) {
    dst[i] = static_cast<float>(static_cast<double>(src[i]) * range + scale.min);
  }
  out.meta().erase("norm_min");
  out.meta().erase("norm_max");
  return out;
}

Box3 tumor_box(const Tumor& tumor, const Shape3& shape, double margin) {
  const std::array<std::size_t, 3> dims{shape.nz, shape.ny, shape.nx};
  std::array<std::size_t, 3> lo{}, hi{};
  for (int i = 0; i < 3; ++i) {
    const double a = std::floor(tumor.center[i] - tumor.radius - margin);
    const double b = std::ceil(tumor.center[i] + tumor.radius + margin) + 1.0;
    lo[i] = static_cast<std::size_t>(std::max(0.0, a));
    hi[i] = static_cast<std::size_t>(std::min<double>(dims[i], b));
  }
  return {lo[0], lo[1], lo[2], hi[0], hi[1], hi[2]};
}

PhantomSpec random_phantom_spec(const PhantomSpec& base, std::uint64_t seed, int tumor_count,
                                double tumor_contrast, double min_radius, double max_radius) {
  PhantomSpec spec = base;
  spec.seed = seed;
  spec.tumors.clear();
  // Separate stream so tumor placement does not perturb the anatomy draw.
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> radius(min_radius, max_radius);
  const std::array<double, 3> half{base.shape.nz / 2.0, base.shape.ny / 2.0, base.shape.nx / 2.0};
  const std::array<double, 3> center{(base.shape.nz - 1) / 2.0, (base.shape.ny - 1) / 2.0,
                                     (base.shape.nx - 1) / 2.0};
  for (int t = 0; t < tumor_count; ++t) {
    for (int attempt = 0; attempt < 1000; ++attempt) {
      Tumor tumor;
      tumor.contrast = tumor_contrast;
      tumor.radius = radius(rng);
      std::array<double, 3> p{unit(rng), unit(rng), unit(rng)};
      if (p[0] * p[0] + p[1] * p[1] + p[2] * p[2] > 1.0) continue;
      bool ok = true;
      for (int i = 0; i < 3; ++i) {
        // Keep lesions in the white-matter core, away from the cortex.
        tumor.center[i] = center[i] + 0.45 * p[i] * (kHeadAxes[i] - kAxisJitter) * half[i];
        const double dims = i == 0 ? base.shape.nz : i == 1 ? base.shape.ny : base.shape.nx;
        if (tumor.center[i] - tumor.radius < 0.0 || tumor.center[i] + tumor.radius > dims - 1) {
          ok = false;
        }
      }
      if (!ok) continue;
      spec.tumors.push_back(tumor);
      break;
    }
  }
  return spec;
}

}  // namespace cdn
