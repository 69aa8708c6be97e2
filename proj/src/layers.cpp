// Copyright 2026 The cycledcn Authors.
// SPDX-License-Identifier: Apache-2.0

#include "cycledcn/layers.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Core>

#include "cycledcn/error.hpp"

namespace cdn {
namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMatrix = Eigen::Map<RowMatrix>;
using ConstMapMatrix = Eigen::Map<const RowMatrix>;

// dst (m x n) = or += a (m x k) * b (k x n), all row-major. Eigen routes
// single-row or single-column results through its matrix-vector kernels,
// whose summation order depends on buffer alignment; those shapes use plain
// loops so results do not vary with heap addresses.
void gemm(const double* a, const double* b, double* dst, std::size_t m, std::size_t k,
          std::size_t n, bool accumulate) {
  if (m > 1 && n > 1) {
    ConstMapMatrix ma(a, m, k), mb(b, k, n);
    MapMatrix md(dst, m, n);
    if (accumulate) {
      md.noalias() += ma * mb;
    } else {
      md.noalias() = ma * mb;
    }
    return;
  }
  for (std::size_t i = 0; i < m; ++i) {
    double* row = dst + i * n;
    if (!accumulate) std::fill(row, row + n, 0.0);
    for (std::size_t t = 0; t < k; ++t) {
      const double av = a[i * k + t];
      const double* brow = b + t * n;
      for (std::size_t j = 0; j < n; ++j) row[j] += av * brow[j];
    }
  }
}

// cols has shape (C*k*k, Ho*Wo).
void im2col(const Tensor& x, const Conv2d& conv, std::size_t ho, std::size_t wo,
            std::vector<double>& cols) {
  const std::size_t k = conv.kernel;
  const std::size_t h = x.height(), w = x.width();
  const std::size_t n = ho * wo;
  cols.assign(conv.in_channels * k * k * n, 0.0);
  for (std::size_t c = 0; c < conv.in_channels; ++c) {
    const double* src = x.channel(c).data();
    for (std::size_t ky = 0; ky < k; ++ky) {
      for (std::size_t kx = 0; kx < k; ++kx) {
        double* row = cols.data() + ((c * k + ky) * k + kx) * n;
        for (std::size_t oy = 0; oy < ho; ++oy) {
          const auto iy = static_cast<std::ptrdiff_t>(oy * conv.stride + ky) -
                          static_cast<std::ptrdiff_t>(conv.pad);
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
          const double* line = src + iy * w;
          double* dst = row + oy * wo;
          for (std::size_t ox = 0; ox < wo; ++ox) {
            const auto ix = static_cast<std::ptrdiff_t>(ox * conv.stride + kx) -
                            static_cast<std::ptrdiff_t>(conv.pad);
            if (ix >= 0 && ix < static_cast<std::ptrdiff_t>(w)) dst[ox] = line[ix];
          }
        }
      }
    }
  }
}

void col2im(const std::vector<double>& cols, const Conv2d& conv, std::size_t ho, std::size_t wo,
            Tensor& dx) {
  const std::size_t k = conv.kernel;
  const std::size_t h = dx.height(), w = dx.width();
  const std::size_t n = ho * wo;
  for (std::size_t c = 0; c < conv.in_channels; ++c) {
    double* dst = dx.channel(c).data();
    for (std::size_t ky = 0; ky < k; ++ky) {
      for (std::size_t kx = 0; kx < k; ++kx) {
        const double* row = cols.data() + ((c * k + ky) * k + kx) * n;
        for (std::size_t oy = 0; oy < ho; ++oy) {
          const auto iy = static_cast<std::ptrdiff_t>(oy * conv.stride + ky) -
                          static_cast<std::ptrdiff_t>(conv.pad);
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
          double* line = dst + iy * w;
          const double* src = row + oy * wo;
          for (std::size_t ox = 0; ox < wo; ++ox) {
            const auto ix = static_cast<std::ptrdiff_t>(ox * conv.stride + kx) -
                            static_cast<std::ptrdiff_t>(conv.pad);
            if (ix >= 0 && ix < static_cast<std::ptrdiff_t>(w)) line[ix] += src[ox];
          }
        }
      }
    }
  }
}

}  // namespace

std::size_t ParamSet::add(std::string name, std::size_t count) {
  const std::size_t offset = values_.size();
  blocks_.push_back({std::move(name), offset, count});
  values_.resize(offset + count, 0.0);
  return offset;
}

bool ParamSet::all_finite() const {
  for (double v : values_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

Conv2d Conv2d::create(ParamSet& params, const std::string& name, std::size_t in, std::size_t out,
                      std::size_t kernel, std::size_t stride, std::size_t pad) {
  Conv2d c;
  c.in_channels = in;
  c.out_channels = out;
  c.kernel = kernel;
  c.stride = stride;
  c.pad = pad;
  c.weight_offset = params.add(name + ".weight", c.weight_count());
  c.bias_offset = params.add(name + ".bias", out);
  return c;
}

Tensor Conv2d::forward(std::span<const double> params, const Tensor& x) const {
  if (x.channels() != in_channels) {
    throw ValidationError("conv2d: expected " + std::to_string(in_channels) +
                          " input channels, got " + x.shape_string());
  }
  if (x.height() + 2 * pad < kernel || x.width() + 2 * pad < kernel) {
    throw ValidationError("conv2d: input " + x.shape_string() + " smaller than kernel");
  }
  const std::size_t ho = out_size(x.height()), wo = out_size(x.width());
  const std::size_t n = ho * wo;
  const std::size_t depth = in_channels * kernel * kernel;
  thread_local std::vector<double> cols;
  im2col(x, *this, ho, wo, cols);

  Tensor y(out_channels, ho, wo);
  gemm(params.data() + weight_offset, cols.data(), y.data().data(), out_channels, depth, n, false);
  const double* bias = params.data() + bias_offset;
  for (std::size_t o = 0; o < out_channels; ++o) {
    for (double& v : y.channel(o)) v += bias[o];
  }
  return y;
}

Tensor Conv2d::backward(std::span<const double> params, const Tensor& x, const Tensor& grad_out,
                        std::span<double> grads, bool want_input_grad) const {
  const std::size_t ho = out_size(x.height()), wo = out_size(x.width());
  const std::size_t n = ho * wo;
  const std::size_t depth = in_channels * kernel * kernel;
  if (grad_out.channels() != out_channels || grad_out.height() != ho || grad_out.width() != wo) {
    throw ValidationError("conv2d backward: gradient shape mismatch");
  }
  const double* gy = grad_out.data().data();
  thread_local std::vector<double> cols;
  const bool want_param_grad = !grads.empty();
  if (want_param_grad) {
    im2col(x, *this, ho, wo, cols);
    double* dw = grads.data() + weight_offset;
    if (out_channels > 1 && depth > 1) {
      MapMatrix(dw, out_channels, depth).noalias() +=
          ConstMapMatrix(gy, out_channels, n) * ConstMapMatrix(cols.data(), depth, n).transpose();
    } else {
      for (std::size_t o = 0; o < out_channels; ++o) {
        for (std::size_t d = 0; d < depth; ++d) {
          double acc = 0.0;
          for (std::size_t j = 0; j < n; ++j) acc += gy[o * n + j] * cols[d * n + j];
          dw[o * depth + d] += acc;
        }
      }
    }
    double* db = grads.data() + bias_offset;
    for (std::size_t o = 0; o < out_channels; ++o) {
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) acc += gy[o * n + j];
      db[o] += acc;
    }
  }
  if (!want_input_grad) return {};

  std::vector<double> dcols(depth * n);
  if (depth > 1 && n > 1 && out_channels > 1) {
    MapMatrix(dcols.data(), depth, n).noalias() =
        ConstMapMatrix(params.data() + weight_offset, out_channels, depth).transpose() *
        ConstMapMatrix(gy, out_channels, n);
  } else {
    const double* w = params.data() + weight_offset;
    for (std::size_t o = 0; o < out_channels; ++o) {
      for (std::size_t d = 0; d < depth; ++d) {
        const double wv = w[o * depth + d];
        double* row = dcols.data() + d * n;
        for (std::size_t j = 0; j < n; ++j) row[j] += wv * gy[o * n + j];
      }
    }
  }
  Tensor dx = Tensor::zeros_like(x);
  col2im(dcols, *this, ho, wo, dx);
  return dx;
}

void Conv2d::init_he(std::span<double> params, std::mt19937_64& rng, double gain) const {
  const double fan_in = static_cast<double>(in_channels * kernel * kernel);
  std::normal_distribution<double> normal(0.0, gain * std::sqrt(2.0 / fan_in));
  for (std::size_t i = 0; i < weight_count(); ++i) params[weight_offset + i] = normal(rng);
  for (std::size_t o = 0; o < out_channels; ++o) params[bias_offset + o] = 0.0;
}

void Conv2d::init_zero(std::span<double> params) const {
  for (std::size_t i = 0; i < weight_count(); ++i) params[weight_offset + i] = 0.0;
  for (std::size_t o = 0; o < out_channels; ++o) params[bias_offset + o] = 0.0;
}

Tensor relu(const Tensor& x) {
  Tensor y = x;
  for (double& v : y.data()) v = v > 0.0 ? v : 0.0;
  return y;
}

Tensor relu_backward(const Tensor& pre, const Tensor& grad) {
  Tensor g = grad;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!(pre[i] > 0.0)) g[i] = 0.0;
  }
  return g;
}

Tensor leaky_relu(const Tensor& x, double slope) {
  Tensor y = x;
  for (double& v : y.data()) v = v > 0.0 ? v : slope * v;
  return y;
}

Tensor leaky_relu_backward(const Tensor& pre, const Tensor& grad, double slope) {
  Tensor g = grad;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!(pre[i] > 0.0)) g[i] *= slope;
  }
  return g;
}

}  // namespace cdn
