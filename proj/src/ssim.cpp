// Copyright 2026 The cycledcn Authors.
// SPDX-License-Identifier: Apache-2.0

#include "cycledcn/ssim.hpp"

#include <cmath>
#include <string>

#include "cycledcn/error.hpp"

namespace cdn {
namespace {

struct Plane {
  std::size_t h = 0, w = 0;
  std::vector<double> v;
};

// Valid-region separable correlation.
Plane filter_valid(std::span<const double> in, std::size_t h, std::size_t w,
                   const std::vector<double>& k) {
  const std::size_t n = k.size();
  const std::size_t ho = h - n + 1, wo = w - n + 1;
  std::vector<double> tmp(h * wo, 0.0);
  for (std::size_t y = 0; y < h; ++y) {
    const double* row = in.data() + y * w;
    for (std::size_t x = 0; x < wo; ++x) {
      double acc = 0.0;
      for (std::size_t t = 0; t < n; ++t) acc += k[t] * row[x + t];
      tmp[y * wo + x] = acc;
    }
  }
  Plane out{ho, wo, std::vector<double>(ho * wo, 0.0)};
  for (std::size_t y = 0; y < ho; ++y) {
    for (std::size_t t = 0; t < n; ++t) {
      const double kt = k[t];
      const double* src = tmp.data() + (y + t) * wo;
      double* dst = out.v.data() + y * wo;
      for (std::size_t x = 0; x < wo; ++x) dst[x] += kt * src[x];
    }
  }
  return out;
}

// Adjoint of filter_valid: spreads an (h-n+1) x (w-n+1) map back onto h x w.
std::vector<double> filter_valid_adjoint(const std::vector<double>& g, std::size_t h, std::size_t w,
                                         const std::vector<double>& k) {
  const std::size_t n = k.size();
  const std::size_t ho = h - n + 1, wo = w - n + 1;
  std::vector<double> tmp(h * wo, 0.0);
  for (std::size_t y = 0; y < ho; ++y) {
    for (std::size_t t = 0; t < n; ++t) {
      const double kt = k[t];
      const double* src = g.data() + y * wo;
      double* dst = tmp.data() + (y + t) * wo;
      for (std::size_t x = 0; x < wo; ++x) dst[x] += kt * src[x];
    }
  }
  std::vector<double> out(h * w, 0.0);
  for (std::size_t y = 0; y < h; ++y) {
    const double* src = tmp.data() + y * wo;
    double* row = out.data() + y * w;
    for (std::size_t x = 0; x < wo; ++x) {
      for (std::size_t t = 0; t < n; ++t) row[x + t] += k[t] * src[x];
    }
  }
  return out;
}

struct Moments {
  Plane mx, my, exx, eyy, exy;
};

Moments local_moments(std::span<const double> x, std::span<const double> y, std::size_t h,
                      std::size_t w, const std::vector<double>& k) {
  std::vector<double> xx(h * w), yy(h * w), xy(h * w);
  for (std::size_t i = 0; i < h * w; ++i) {
    xx[i] = x[i] * x[i];
    yy[i] = y[i] * y[i];
    xy[i] = x[i] * y[i];
  }
  return {filter_valid(x, h, w, k), filter_valid(y, h, w, k), filter_valid(xx, h, w, k),
          filter_valid(yy, h, w, k), filter_valid(xy, h, w, k)};
}

void check_inputs(std::span<const double> x, std::span<const double> y, std::size_t h,
                  std::size_t w, const SsimOptions& o) {
  if (x.size() != h * w || y.size() != h * w) {
    throw ValidationError("ssim: input size does not match " + std::to_string(h) + "x" +
                          std::to_string(w));
  }
  if (h < o.window || w < o.window) {
    throw ValidationError("ssim: image " + std::to_string(h) + "x" + std::to_string(w) +
                          " is smaller than the " + std::to_string(o.window) + "x" +
                          std::to_string(o.window) + " window");
  }
  if (!(o.data_range > 0.0)) throw ValidationError("ssim: data_range must be > 0");
}

}  // namespace

std::vector<double> gaussian_window(const SsimOptions& options) {
  std::vector<double> k(options.window);
  const double r = (static_cast<double>(options.window) - 1.0) / 2.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < k.size(); ++i) {
    const double d = static_cast<double>(i) - r;
    k[i] = std::exp(-d * d / (2.0 * options.sigma * options.sigma));
    sum += k[i];
  }
  for (double& v : k) v /= sum;
  return k;
}

double ssim_2d(std::span<const double> x, std::span<const double> y, std::size_t h, std::size_t w,
               const SsimOptions& options) {
  check_inputs(x, y, h, w, options);
  const auto k = gaussian_window(options);
  const Moments m = local_moments(x, y, h, w, k);
  const double c1 = std::pow(options.k1 * options.data_range, 2);
  const double c2 = std::pow(options.k2 * options.data_range, 2);
  double total = 0.0;
  for (std::size_t i = 0; i < m.mx.v.size(); ++i) {
    const double mx = m.mx.v[i], my = m.my.v[i];
    const double sx = m.exx.v[i] - mx * mx;
    const double sy = m.eyy.v[i] - my * my;
    const double sxy = m.exy.v[i] - mx * my;
    total += ((2.0 * mx * my + c1) * (2.0 * sxy + c2)) /
             ((mx * mx + my * my + c1) * (sx + sy + c2));
  }
  return total / static_cast<double>(m.mx.v.size());
}

double ssim_2d_grad(std::span<const double> x, std::span<const double> y, std::size_t h,
                    std::size_t w, std::span<double> grad_x, const SsimOptions& options) {
  check_inputs(x, y, h, w, options);
  if (grad_x.size() != h * w) throw ValidationError("ssim_2d_grad: gradient buffer size mismatch");
  const auto k = gaussian_window(options);
  const Moments m = local_moments(x, y, h, w, k);
  const double c1 = std::pow(options.k1 * options.data_range, 2);
  const double c2 = std::pow(options.k2 * options.data_range, 2);
  const std::size_t n = m.mx.v.size();
  const double inv_n = 1.0 / static_cast<double>(n);

  std::vector<double> g_mean(n), g_xx(n), g_xy(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double mx = m.mx.v[i], my = m.my.v[i];
    const double a1 = 2.0 * mx * my + c1;
    const double a2 = 2.0 * (m.exy.v[i] - mx * my) + c2;
    const double b1 = mx * mx + my * my + c1;
    const double b2 = (m.exx.v[i] - mx * mx) + (m.eyy.v[i] - my * my) + c2;
    const double d = b1 * b2;
    const double s = a1 * a2 / d;
    total += s;
    // Partials w.r.t. the filtered quantities mu_x, E[x^2], E[xy].
    g_mean[i] = inv_n * ((2.0 * my * a2 - 2.0 * my * a1) / d - s * (2.0 * mx * b2 - 2.0 * mx * b1) / d);
    g_xx[i] = inv_n * (-s * b1 / d);
    g_xy[i] = inv_n * (2.0 * a1 / d);
  }
  const auto back_mean = filter_valid_adjoint(g_mean, h, w, k);
  const auto back_xx = filter_valid_adjoint(g_xx, h, w, k);
  const auto back_xy = filter_valid_adjoint(g_xy, h, w, k);
  for (std::size_t i = 0; i < h * w; ++i) {
    grad_x[i] = back_mean[i] + 2.0 * x[i] * back_xx[i] + y[i] * back_xy[i];
  }
  return total * inv_n;
}

double ssim_cs_2d(std::span<const double> x, std::span<const double> y, std::size_t h,
                  std::size_t w, const SsimOptions& options) {
  check_inputs(x, y, h, w, options);
  const auto k = gaussian_window(options);
  const Moments m = local_moments(x, y, h, w, k);
  const double c2 = std::pow(options.k2 * options.data_range, 2);
  double total = 0.0;
  for (std::size_t i = 0; i < m.mx.v.size(); ++i) {
    const double mx = m.mx.v[i], my = m.my.v[i];
    const double sx = m.exx.v[i] - mx * mx;
    const double sy = m.eyy.v[i] - my * my;
    const double sxy = m.exy.v[i] - mx * my;
    total += (2.0 * sxy + c2) / (sx + sy + c2);
  }
  return total / static_cast<double>(m.mx.v.size());
}

}  // namespace cdn
