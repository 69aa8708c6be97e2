// Copyright 2026 The cycledcn Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <filesystem>
#include <random>
#include <string>

#include "cycledcn/tensor.hpp"
#include "cycledcn/volume.hpp"

namespace cdn::test {

inline Tensor random_tensor(std::mt19937_64& rng, std::size_t c, std::size_t h, std::size_t w,
                            double lo = 0.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor t(c, h, w);
  for (auto& v : t.data()) v = u(rng);
  return t;
}

inline Volume random_volume(std::mt19937_64& rng, Shape3 shape, float lo = 0.0f, float hi = 1.0f) {
  std::uniform_real_distribution<float> u(lo, hi);
  Volume v(shape);
  for (auto& x : v.data()) x = u(rng);
  return v;
}

inline double rel_err(double a, double b) {
  const double d = std::abs(a - b);
  const double s = std::max(std::abs(a), std::abs(b));
  return s == 0.0 ? d : d / s;
}

/// Relative error with an absolute floor for finite-difference roundoff.
inline bool fd_close(double analytic, double fd, double rel, double abs_floor = 1e-9) {
  return std::abs(analytic - fd) <= rel * std::max(std::abs(analytic), std::abs(fd)) + abs_floor;
}

/// Fresh scratch directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("cycledcn_" + tag + "_" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& s) const { return path_ / s; }

 private:
  std::filesystem::path path_;
};

}  // namespace cdn::test
