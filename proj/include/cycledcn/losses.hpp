// Copyright 2026 The cycledcn Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cycledcn/ssim.hpp"
#include "cycledcn/tensor.hpp"

namespace cdn {

/// Generator-side loss terms, in the order used by LossWeights and the CSV log.
enum class LossTerm : std::size_t { Gan = 0, Cyc = 1, Identity = 2, Sup = 3, SsimPlanes = 4 };
inline constexpr std::size_t kLossTermCount = 5;
inline constexpr std::array<LossTerm, kLossTermCount> kAllLossTerms{
    LossTerm::Gan, LossTerm::Cyc, LossTerm::Identity, LossTerm::Sup, LossTerm::SsimPlanes};

std::string to_string(LossTerm term);
LossTerm parse_loss_term(const std::string& text);

/// Subset of loss terms that participate in training.
class LossSet {
 public:
  LossSet() = default;
  static LossSet all();
  static LossSet of(std::initializer_list<LossTerm> terms);

  bool contains(LossTerm t) const noexcept { return bits_[static_cast<std::size_t>(t)]; }
  void insert(LossTerm t) noexcept { bits_[static_cast<std::size_t>(t)] = true; }
  void erase(LossTerm t) noexcept { bits_[static_cast<std::size_t>(t)] = false; }
  bool empty() const noexcept;
  std::size_t count() const noexcept;
  std::vector<std::string> names() const;
  bool operator==(const LossSet&) const = default;

 private:
  std::array<bool, kLossTermCount> bits_{};
};

struct LossBreakdown {
  double gan = 0.0;
  double cyc = 0.0;
  double identity = 0.0;
  double sup = 0.0;
  double ssim_planes = 0.0;
  double disc_O = 0.0;
  double disc_U = 0.0;

  double term(LossTerm t) const noexcept;
  double& term(LossTerm t) noexcept;
  /// Throws DivergenceError naming the first non-finite term.
  void require_finite() const;

  LossBreakdown& operator+=(const LossBreakdown& other);
  LossBreakdown& operator*=(double s);
};

struct LossWeights {
  std::array<double, kLossTermCount> lambda{};  // zero for inactive terms
  double epsilon = 1e-8;
  LossSet active;

  double operator[](LossTerm t) const noexcept { return lambda[static_cast<std::size_t>(t)]; }
  static LossWeights uniform(const LossSet& active, double epsilon = 1e-8);
  void validate() const;
};

// Adversarial terms (least-squares). Scores are mean patch scores D(x).

/// (D_O(P'(u)) - 1)^2 + (D_U(P(o)) - 1)^2.
double gan_generator_loss(double d_low_on_fake_low, double d_full_on_fake_full);
/// Batch form: mean over paired score lists.
double gan_generator_loss(std::span<const double> d_low_on_fake_low,
                          std::span<const double> d_full_on_fake_full);

/// D_O objective: D_O(P'(u))^2 + (D_O(o) - 1)^2.
double discriminator_loss_O(double score_on_fake_low, double score_on_real_low);
/// D_U objective: D_U(P(o))^2 + (D_U(u) - 1)^2.
double discriminator_loss_U(double score_on_fake_full, double score_on_real_full);
double discriminator_loss_O(std::span<const double> fake, std::span<const double> real);
double discriminator_loss_U(std::span<const double> fake, std::span<const double> real);

// Image terms. Norms are per-pixel means (MAE / MSE).

double mean_abs_error(const Tensor& a, const Tensor& b);
double mean_sq_error(const Tensor& a, const Tensor& b);

/// |P'(P(o)) - o| + |P(P'(u)) - u|, each as a mean over pixels.
double cycle_loss(const Tensor& recovered_low, const Tensor& real_low,
                  const Tensor& recovered_full, const Tensor& real_full);
/// Mean squared error between P(u) and u.
double identity_loss(const Tensor& same_full, const Tensor& real_full);
/// MSE(P'(u), o) + MSE(P(o), u).
double supervised_loss(const Tensor& fake_low, const Tensor& real_low, const Tensor& fake_full,
                       const Tensor& real_full);

/// d/da of mean_abs_error(a, b) (sign subgradient, 0 at ties).
Tensor mean_abs_error_grad(const Tensor& a, const Tensor& b);
/// d/da of mean_sq_error(a, b).
Tensor mean_sq_error_grad(const Tensor& a, const Tensor& b);

/// (1 - mean sagittal SSIM) + (1 - mean coronal SSIM) between two stacks of
/// consecutive axial slices. Needs at least `window` slices.
double plane_ssim_loss(std::span<const Tensor> denoised, std::span<const Tensor> full,
                       const SsimOptions& options = {});
/// Same value; fills grad (one tensor per denoised slice) with d loss / d denoised.
double plane_ssim_loss_grad(std::span<const Tensor> denoised, std::span<const Tensor> full,
                            std::vector<Tensor>& grad, const SsimOptions& options = {});
/// Mean SSIM over planes at fixed x (sagittal: z-y planes) or fixed y (coronal: z-x planes).
double mean_sagittal_ssim(std::span<const Tensor> a, std::span<const Tensor> b,
                          const SsimOptions& options = {});
double mean_coronal_ssim(std::span<const Tensor> a, std::span<const Tensor> b,
                         const SsimOptions& options = {});

/// Weighted sum over the active terms.
double total_loss(const LossBreakdown& breakdown, const LossWeights& weights);

/// lambda_i = (1 / (L_i + eps)) / sum_j 1 / (L_j + eps) over the active terms.
LossWeights update_weights(const LossBreakdown& current, double epsilon, const LossSet& active);
LossWeights update_weights(const LossBreakdown& current, double epsilon);

}  // namespace cdn
