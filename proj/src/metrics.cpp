// Copyright 2026 The cycledcn Authors.
// SPDX-License-Identifier: Apache-2.0

#include "cycledcn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/distributions/students_t.hpp>

#include "cycledcn/error.hpp"

namespace cdn {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

template <typename T>
void check_pair(std::span<const T> x, std::span<const T> ref, const char* what) {
  if (x.size() != ref.size() || x.empty()) {
    throw ValidationError(std::string(what) + ": inputs must be non-empty and equally sized");
  }
}

template <typename T>
double mse(std::span<const T> x, std::span<const T> ref) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = static_cast<double>(x[i]) - static_cast<double>(ref[i]);
    s += d * d;
  }
  return s / static_cast<double>(x.size());
}

template <typename T>
double psnr_impl(std::span<const T> x, std::span<const T> ref, double range) {
  check_pair(x, ref, "psnr");
  if (!(range > 0.0)) throw ValidationError("psnr: data_range must be > 0");
  const double m = mse(x, ref);
  if (m == 0.0) return kInf;
  return 10.0 * std::log10(range * range / m);
}

template <typename T>
double nrmse_impl(std::span<const T> x, std::span<const T> ref) {
  check_pair(x, ref, "nrmse");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = static_cast<double>(ref[i]);
    const double d = static_cast<double>(x[i]) - r;
    num += d * d;
    den += r * r;
  }
  if (den == 0.0) throw ValidationError("nrmse: reference has zero norm");
  return std::sqrt(num / den);
}

std::vector<double> slice_values(const Volume& v, std::size_t z) {
  const std::size_t n = v.shape().ny * v.shape().nx;
  const auto d = v.data().subspan(z * n, n);
  return {d.begin(), d.end()};
}

}  // namespace

double psnr(std::span<const double> x, std::span<const double> ref, double data_range) {
  return psnr_impl(x, ref, data_range);
}

double psnr(const Volume& x, const Volume& ref, double data_range) {
  require_same_shape(x, ref, "psnr");
  return psnr_impl(x.data(), ref.data(), data_range);
}

double ssim_index(const Volume& x, const Volume& ref, double data_range) {
  require_same_shape(x, ref, "ssim_index");
  SsimOptions o;
  o.data_range = data_range;
  const Shape3& s = x.shape();
  double total = 0.0;
  for (std::size_t z = 0; z < s.nz; ++z) {
    total += ssim_2d(slice_values(x, z), slice_values(ref, z), s.ny, s.nx, o);
  }
  return total / static_cast<double>(s.nz);
}

double nrmse(std::span<const double> x, std::span<const double> ref) { return nrmse_impl(x, ref); }

double nrmse(const Volume& x, const Volume& ref) {
  require_same_shape(x, ref, "nrmse");
  return nrmse_impl(x.data(), ref.data());
}

// ---------------------------------------------------------------------------

std::size_t RoiMasks::tumor_count() const {
  return static_cast<std::size_t>(std::count(tumor.begin(), tumor.end(), 1));
}

std::size_t RoiMasks::background_count() const {
  return static_cast<std::size_t>(std::count(background.begin(), background.end(), 1));
}

RoiMasks segment_rois(const Volume& v, const Box3& box, double threshold_frac,
                      std::size_t shell_width) {
  const Shape3& s = v.shape();
  if (box.empty() || !box.within(s)) {
    throw ValidationError("segment_rois: tumor box is empty or outside the volume");
  }
  if (!(threshold_frac > 0.0 && threshold_frac <= 1.0)) {
    throw ValidationError("segment_rois: threshold_frac must lie in (0, 1]");
  }
  float peak = -std::numeric_limits<float>::infinity();
  for (std::size_t z = box.z0; z < box.z1; ++z) {
    for (std::size_t y = box.y0; y < box.y1; ++y) {
      for (std::size_t x = box.x0; x < box.x1; ++x) peak = std::max(peak, v.at(z, y, x));
    }
  }
  RoiMasks m{s, std::vector<std::uint8_t>(s.count(), 0), std::vector<std::uint8_t>(s.count(), 0)};
  if (peak > 0.0f) {
    const double cut = threshold_frac * static_cast<double>(peak);
    for (std::size_t z = box.z0; z < box.z1; ++z) {
      for (std::size_t y = box.y0; y < box.y1; ++y) {
        for (std::size_t x = box.x0; x < box.x1; ++x) {
          if (static_cast<double>(v.at(z, y, x)) >= cut) m.tumor[v.index(z, y, x)] = 1;
        }
      }
    }
  }
  if (m.tumor_count() == 0) {
    throw ValidationError(
        "segment_rois: empty tumor mask; the box has no positive peak, lower threshold_frac or "
        "move the box");
  }
  const Box3 outer{box.z0 - std::min(box.z0, shell_width), box.y0 - std::min(box.y0, shell_width),
                   box.x0 - std::min(box.x0, shell_width), std::min(s.nz, box.z1 + shell_width),
                   std::min(s.ny, box.y1 + shell_width), std::min(s.nx, box.x1 + shell_width)};
  for (std::size_t z = outer.z0; z < outer.z1; ++z) {
    for (std::size_t y = outer.y0; y < outer.y1; ++y) {
      for (std::size_t x = outer.x0; x < outer.x1; ++x) {
        const std::size_t i = v.index(z, y, x);
        if (!box.contains(z, y, x) && !m.tumor[i]) m.background[i] = 1;
      }
    }
  }
  return m;
}

double cnr(const Volume& v, const RoiMasks& masks) {
  if (!(masks.shape == v.shape()) || masks.tumor.size() != v.size() ||
      masks.background.size() != v.size()) {
    throw ValidationError("cnr: masks do not match the volume shape");
  }
  double st = 0.0, sb = 0.0;
  std::size_t nt = 0, nb = 0;
  const auto d = v.data();
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (masks.tumor[i] && masks.background[i]) throw ValidationError("cnr: masks overlap");
    if (masks.tumor[i]) st += d[i], ++nt;
    if (masks.background[i]) sb += d[i], ++nb;
  }
  if (nt == 0 || nb == 0) throw ValidationError("cnr: tumor and background masks must be non-empty");
  const double mt = st / static_cast<double>(nt);
  const double mb = sb / static_cast<double>(nb);
  double var = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (masks.background[i]) {
      const double e = static_cast<double>(d[i]) - mb;
      var += e * e;
    }
  }
  const double sigma = std::sqrt(var / static_cast<double>(nb));
  if (!(sigma > 0.0)) throw ValidationError("cnr: background standard deviation is zero");
  return std::abs(mt - mb) / sigma;
}

// ---------------------------------------------------------------------------

namespace {

struct Gradients {
  std::vector<double> gx, gy;
};

Gradients sobel(std::span<const double> img, std::size_t h, std::size_t w) {
  Gradients g{std::vector<double>(h * w), std::vector<double>(h * w)};
  const auto at = [&](std::ptrdiff_t y, std::ptrdiff_t x) {
    y = std::clamp<std::ptrdiff_t>(y, 0, static_cast<std::ptrdiff_t>(h) - 1);
    x = std::clamp<std::ptrdiff_t>(x, 0, static_cast<std::ptrdiff_t>(w) - 1);
    return img[static_cast<std::size_t>(y) * w + static_cast<std::size_t>(x)];
  };
  for (std::size_t yy = 0; yy < h; ++yy) {
    for (std::size_t xx = 0; xx < w; ++xx) {
      const auto y = static_cast<std::ptrdiff_t>(yy), x = static_cast<std::ptrdiff_t>(xx);
      g.gx[yy * w + xx] = (at(y - 1, x + 1) + 2.0 * at(y, x + 1) + at(y + 1, x + 1)) -
                          (at(y - 1, x - 1) + 2.0 * at(y, x - 1) + at(y + 1, x - 1));
      g.gy[yy * w + xx] = (at(y + 1, x - 1) + 2.0 * at(y + 1, x) + at(y + 1, x + 1)) -
                          (at(y - 1, x - 1) + 2.0 * at(y - 1, x) + at(y - 1, x + 1));
    }
  }
  return g;
}

std::vector<double> gaussian_smooth(std::span<const double> img, std::size_t h, std::size_t w,
                                    double sigma) {
  if (sigma <= 0.0) return {img.begin(), img.end()};
  const auto r = static_cast<std::ptrdiff_t>(std::ceil(3.0 * sigma));
  std::vector<double> k(static_cast<std::size_t>(2 * r + 1));
  double sum = 0.0;
  for (std::ptrdiff_t i = -r; i <= r; ++i) {
    const double v = std::exp(-static_cast<double>(i * i) / (2.0 * sigma * sigma));
    k[static_cast<std::size_t>(i + r)] = v;
    sum += v;
  }
  for (double& v : k) v /= sum;
  const auto clampi = [](std::ptrdiff_t v, std::size_t n) {
    return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(v, 0, static_cast<std::ptrdiff_t>(n) - 1));
  };
  std::vector<double> tmp(h * w), out(h * w);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      double acc = 0.0;
      for (std::ptrdiff_t i = -r; i <= r; ++i) {
        acc += k[static_cast<std::size_t>(i + r)] * img[y * w + clampi(static_cast<std::ptrdiff_t>(x) + i, w)];
      }
      tmp[y * w + x] = acc;
    }
  }
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      double acc = 0.0;
      for (std::ptrdiff_t i = -r; i <= r; ++i) {
        acc += k[static_cast<std::size_t>(i + r)] * tmp[clampi(static_cast<std::ptrdiff_t>(y) + i, h) * w + x];
      }
      out[y * w + x] = acc;
    }
  }
  return out;
}

}  // namespace

std::vector<double> sobel_magnitude(std::span<const double> img, std::size_t h, std::size_t w) {
  if (img.size() != h * w) throw ValidationError("sobel_magnitude: size mismatch");
  const Gradients g = sobel(img, h, w);
  std::vector<double> m(h * w);
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = std::hypot(g.gx[i], g.gy[i]);
  return m;
}

double epi(const Volume& denoised, const Volume& full) {
  require_same_shape(denoised, full, "epi");
  const Shape3& s = full.shape();
  double num = 0.0, den = 0.0;
  for (std::size_t z = 0; z < s.nz; ++z) {
    for (double v : sobel_magnitude(slice_values(denoised, z), s.ny, s.nx)) num += v;
    for (double v : sobel_magnitude(slice_values(full, z), s.ny, s.nx)) den += v;
  }
  if (den == 0.0) throw ValidationError("epi: reference volume has no gradient");
  return num / den;
}

EdgeSet canny_edges(std::span<const double> img, std::size_t h, std::size_t w,
                    const CannyOptions& o) {
  if (img.size() != h * w) throw ValidationError("canny_edges: size mismatch");
  if (h < 16 || w < 16) throw ValidationError("canny_edges: slice must be at least 16x16");
  if (!(o.low_frac >= 0.0 && o.low_frac <= o.high_frac && o.high_frac <= 1.0)) {
    throw ValidationError("canny_edges: need 0 <= low_frac <= high_frac <= 1");
  }
  EdgeSet out{h, w, {}};
  const auto smooth = gaussian_smooth(img, h, w, o.sigma);
  const Gradients g = sobel(smooth, h, w);
  std::vector<double> mag(h * w);
  double peak = 0.0;
  for (std::size_t i = 0; i < mag.size(); ++i) {
    mag[i] = std::hypot(g.gx[i], g.gy[i]);
    peak = std::max(peak, mag[i]);
  }
  if (peak == 0.0) return out;

  // Non-maximum suppression along the quantised gradient direction. Ties go
  // to the earlier pixel along the direction so plateaus stay one pixel wide.
  std::vector<double> thin(h * w, 0.0);
  for (std::size_t y = 1; y + 1 < h; ++y) {
    for (std::size_t x = 1; x + 1 < w; ++x) {
      const std::size_t i = y * w + x;
      const double m = mag[i];
      if (m == 0.0) continue;
      double angle = std::atan2(g.gy[i], g.gx[i]) * 180.0 / std::numbers::pi;
      if (angle < 0.0) angle += 180.0;
      std::ptrdiff_t dy = 0, dx = 0;
      if (angle < 22.5 || angle >= 157.5) {
        dx = 1;
      } else if (angle < 67.5) {
        dy = 1, dx = 1;
      } else if (angle < 112.5) {
        dy = 1;
      } else {
        dy = 1, dx = -1;
      }
      const double prev = mag[static_cast<std::size_t>(static_cast<std::ptrdiff_t>(i) - dy * static_cast<std::ptrdiff_t>(w) - dx)];
      const double next = mag[static_cast<std::size_t>(static_cast<std::ptrdiff_t>(i) + dy * static_cast<std::ptrdiff_t>(w) + dx)];
      if (m > prev && m >= next) thin[i] = m;
    }
  }

  const double hi = o.high_frac * peak, lo = o.low_frac * peak;
  std::vector<std::uint8_t> state(h * w, 0);  // 1 weak, 2 strong/accepted
  std::vector<std::size_t> stack;
  for (std::size_t i = 0; i < thin.size(); ++i) {
    if (thin[i] >= hi && thin[i] > 0.0) {
      state[i] = 2;
      stack.push_back(i);
    } else if (thin[i] >= lo && thin[i] > 0.0) {
      state[i] = 1;
    }
  }
  while (!stack.empty()) {
    const std::size_t i = stack.back();
    stack.pop_back();
    const std::size_t y = i / w, x = i % w;
    for (std::size_t yy = y - 1; yy <= y + 1; ++yy) {
      for (std::size_t xx = x - 1; xx <= x + 1; ++xx) {
        const std::size_t j = yy * w + xx;
        if (state[j] == 1) {
          state[j] = 2;
          stack.push_back(j);
        }
      }
    }
  }
  for (std::size_t i = 0; i < state.size(); ++i) {
    if (state[i] == 2) out.points.push_back({static_cast<int>(i / w), static_cast<int>(i % w)});
  }
  return out;
}

EdgeSet canny_edges(const Volume& v, std::size_t z, const CannyOptions& options) {
  if (z >= v.shape().nz) throw ValidationError("canny_edges: slice index out of range");
  return canny_edges(slice_values(v, z), v.shape().ny, v.shape().nx, options);
}

// ---------------------------------------------------------------------------

namespace {

/// Uniform grid over a point set for nearest-neighbour queries.
class PointGrid {
 public:
  explicit PointGrid(std::span<const EdgePoint> pts) {
    int r0 = pts[0].row, r1 = r0, c0 = pts[0].col, c1 = c0;
    for (const auto& p : pts) {
      r0 = std::min(r0, p.row), r1 = std::max(r1, p.row);
      c0 = std::min(c0, p.col), c1 = std::max(c1, p.col);
    }
    row0_ = r0, col0_ = c0;
    const double area = static_cast<double>(r1 - r0 + 1) * static_cast<double>(c1 - c0 + 1);
    cell_ = std::max(1, static_cast<int>(std::sqrt(area / static_cast<double>(pts.size())) * 2.0));
    rows_ = (r1 - r0) / cell_ + 1;
    cols_ = (c1 - c0) / cell_ + 1;
    start_.assign(static_cast<std::size_t>(rows_ * cols_) + 1, 0);
    for (const auto& p : pts) ++start_[static_cast<std::size_t>(cell_index(p)) + 1];
    for (std::size_t i = 1; i < start_.size(); ++i) start_[i] += start_[i - 1];
    items_.resize(pts.size());
    auto fill = start_;
    for (const auto& p : pts) items_[fill[static_cast<std::size_t>(cell_index(p))]++] = p;
  }

  /// Squared distance to the nearest point, stopping early once it is known
  /// to be <= stop_below (the caller only needs to know that much).
  long long nearest_sq(const EdgePoint& a, long long stop_below) const {
    const auto floor_div = [](int n, int d) { return n >= 0 ? n / d : -((-n + d - 1) / d); };
    const int cr = std::clamp(floor_div(a.row - row0_, cell_), -1, rows_);
    const int cc = std::clamp(floor_div(a.col - col0_, cell_), -1, cols_);
    long long best = std::numeric_limits<long long>::max();
    const int max_ring = std::max({cr + 1, rows_ - cr, cc + 1, cols_ - cc}) + 1;
    for (int ring = 0; ring <= max_ring; ++ring) {
      for (int r = cr - ring; r <= cr + ring; ++r) {
        if (r < 0 || r >= rows_) continue;
        const bool edge_row = r == cr - ring || r == cr + ring;
        for (int c = cc - ring; c <= cc + ring; c += edge_row ? 1 : 2 * ring) {
          if (c >= 0 && c < cols_) {
            const auto cell = static_cast<std::size_t>(r * cols_ + c);
            for (std::size_t i = start_[cell]; i < start_[cell + 1]; ++i) {
              const long long dr = items_[i].row - a.row, dc = items_[i].col - a.col;
              best = std::min(best, dr * dr + dc * dc);
            }
          }
          if (ring == 0) break;
        }
      }
      if (best <= stop_below) return best;
      // Unvisited points lie at least ring * cell_ away along some axis.
      const long long bound = static_cast<long long>(ring) * cell_;
      if (best <= bound * bound) return best;
    }
    return best;
  }

 private:
  int cell_index(const EdgePoint& p) const {
    return ((p.row - row0_) / cell_) * cols_ + (p.col - col0_) / cell_;
  }

  int row0_ = 0, col0_ = 0, cell_ = 1, rows_ = 1, cols_ = 1;
  std::vector<std::size_t> start_;
  std::vector<EdgePoint> items_;
};

long long directed_sq(std::span<const EdgePoint> a, const PointGrid& b) {
  long long worst = 0;
  for (const auto& p : a) worst = std::max(worst, b.nearest_sq(p, worst));
  return worst;
}

}  // namespace

double hausdorff(std::span<const EdgePoint> a, std::span<const EdgePoint> b) {
  if (a.empty() || b.empty()) throw ValidationError("hausdorff: point sets must be non-empty");
  const PointGrid ga(a), gb(b);
  const long long d = std::max(directed_sq(a, gb), directed_sq(b, ga));
  return std::sqrt(static_cast<double>(d));
}

double hausdorff(const EdgeSet& a, const EdgeSet& b) { return hausdorff(a.points, b.points); }

// ---------------------------------------------------------------------------

MetricsReport evaluate_case(const Volume& denoised, const Volume& low, const Volume& full,
                            const EvaluateOptions& o) {
  require_same_shape(denoised, full, "evaluate_case denoised/full");
  require_same_shape(low, full, "evaluate_case low/full");
  MetricsReport r;
  r.psnr = psnr(denoised, full, o.data_range);
  r.ssim = ssim_index(denoised, full, o.data_range);
  r.nrmse = nrmse(denoised, full);
  r.epi = epi(denoised, full);
  if (o.tumor_box) {
    const RoiMasks masks = segment_rois(full, *o.tumor_box, o.threshold_frac, o.shell_width);
    r.cnr = cnr(denoised, masks);
  }
  r.hausdorff_slice = o.hausdorff_slice.value_or(full.shape().nz / 2);
  if (r.hausdorff_slice >= full.shape().nz) {
    throw ValidationError("evaluate_case: hausdorff slice out of range");
  }
  const EdgeSet a = canny_edges(denoised, r.hausdorff_slice, o.canny);
  const EdgeSet b = canny_edges(full, r.hausdorff_slice, o.canny);
  if (!a.points.empty() && !b.points.empty()) r.hausdorff = hausdorff(a, b);
  const auto it = low.meta().find("dose_fraction");
  if (it != low.meta().end()) r.dose_fraction = it->second;
  return r;
}

Stat summarize(std::span<const double> values) {
  Stat s;
  double sum = 0.0;
  for (double v : values) {
    if (std::isnan(v)) continue;
    sum += v;
    ++s.count;
  }
  if (s.count == 0) {
    s.mean = s.std = std::numeric_limits<double>::quiet_NaN();
    return s;
  }
  s.mean = sum / static_cast<double>(s.count);
  if (s.count < 2) return s;
  if (!std::isfinite(s.mean)) {
    s.std = std::numeric_limits<double>::quiet_NaN();
    return s;
  }
  double ss = 0.0;
  for (double v : values) {
    if (!std::isnan(v)) ss += (v - s.mean) * (v - s.mean);
  }
  s.std = std::sqrt(ss / static_cast<double>(s.count - 1));
  return s;
}

ReportSummary summarize(std::span<const MetricsReport> reports) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> p, s, n, e, c, h;
  for (const auto& r : reports) {
    p.push_back(r.psnr);
    s.push_back(r.ssim);
    n.push_back(r.nrmse);
    e.push_back(r.epi);
    c.push_back(r.cnr.value_or(nan));
    h.push_back(r.hausdorff.value_or(nan));
  }
  return {summarize(p), summarize(s), summarize(n), summarize(e), summarize(c), summarize(h)};
}

TTestResult paired_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) {
    throw ValidationError("paired_t_test: need two equally long samples with at least 2 pairs");
  }
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  const Stat st = summarize(d);
  TTestResult r;
  r.dof = static_cast<double>(d.size() - 1);
  if (st.std == 0.0) {
    r.t = st.mean == 0.0 ? 0.0 : std::copysign(kInf, st.mean);
    r.p_value = st.mean == 0.0 ? 1.0 : 0.0;
    return r;
  }
  r.t = st.mean / (st.std / std::sqrt(static_cast<double>(d.size())));
  const boost::math::students_t dist(r.dof);
  r.p_value = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(r.t)));
  return r;
}

}  // namespace cdn
