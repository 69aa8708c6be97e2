// Copyright 2026 The cycledcn Authors.
// SPDX-License-Identifier: Apache-2.0

#include "cycledcn/losses.hpp"

#include <cmath>

#include "cycledcn/error.hpp"

namespace cdn {

std::string to_string(LossTerm term) {
  switch (term) {
    case LossTerm::Gan: return "gan";
    case LossTerm::Cyc: return "cyc";
    case LossTerm::Identity: return "identity";
    case LossTerm::Sup: return "sup";
    case LossTerm::SsimPlanes: return "ssim_planes";
  }
  return "unknown";
}

LossTerm parse_loss_term(const std::string& text) {
  for (LossTerm t : kAllLossTerms) {
    if (to_string(t) == text) return t;
  }
  throw ValidationError("unknown loss term '" + text +
                        "' (expected gan, cyc, identity, sup or ssim_planes)");
}

LossSet LossSet::all() {
  LossSet s;
  for (LossTerm t : kAllLossTerms) s.insert(t);
  return s;
}

LossSet LossSet::of(std::initializer_list<LossTerm> terms) {
  LossSet s;
  for (LossTerm t : terms) s.insert(t);
  return s;
}

bool LossSet::empty() const noexcept { return count() == 0; }

std::size_t LossSet::count() const noexcept {
  std::size_t n = 0;
  for (bool b : bits_) n += b ? 1 : 0;
  return n;
}

std::vector<std::string> LossSet::names() const {
  std::vector<std::string> out;
  for (LossTerm t : kAllLossTerms) {
    if (contains(t)) out.push_back(to_string(t));
  }
  return out;
}

double LossBreakdown::term(LossTerm t) const noexcept {
  switch (t) {
    case LossTerm::Gan: return gan;
    case LossTerm::Cyc: return cyc;
    case LossTerm::Identity: return identity;
    case LossTerm::Sup: return sup;
    case LossTerm::SsimPlanes: return ssim_planes;
  }
  return 0.0;
}

double& LossBreakdown::term(LossTerm t) noexcept {
  switch (t) {
    case LossTerm::Gan: return gan;
    case LossTerm::Cyc: return cyc;
    case LossTerm::Identity: return identity;
    case LossTerm::Sup: return sup;
    case LossTerm::SsimPlanes: return ssim_planes;
  }
  return gan;
}

void LossBreakdown::require_finite() const {
  const std::array<std::pair<const char*, double>, 7> terms{{{"gan", gan},
                                                             {"cyc", cyc},
                                                             {"identity", identity},
                                                             {"sup", sup},
                                                             {"ssim_planes", ssim_planes},
                                                             {"disc_O", disc_O},
                                                             {"disc_U", disc_U}}};
  for (const auto& [name, value] : terms) {
    if (!std::isfinite(value)) {
      throw DivergenceError(name, std::string("training diverged: loss term '") + name +
                                      "' is " + std::to_string(value));
    }
  }
}

LossBreakdown& LossBreakdown::operator+=(const LossBreakdown& o) {
  gan += o.gan;
  cyc += o.cyc;
  identity += o.identity;
  sup += o.sup;
  ssim_planes += o.ssim_planes;
  disc_O += o.disc_O;
  disc_U += o.disc_U;
  return *this;
}

LossBreakdown& LossBreakdown::operator*=(double s) {
  gan *= s;
  cyc *= s;
  identity *= s;
  sup *= s;
  ssim_planes *= s;
  disc_O *= s;
  disc_U *= s;
  return *this;
}

LossWeights LossWeights::uniform(const LossSet& active, double epsilon) {
  if (active.empty()) throw ValidationError("at least one loss term must be enabled");
  LossWeights w;
  w.epsilon = epsilon;
  w.active = active;
  const double each = 1.0 / static_cast<double>(active.count());
  for (LossTerm t : kAllLossTerms) {
    if (active.contains(t)) w.lambda[static_cast<std::size_t>(t)] = each;
  }
  return w;
}

void LossWeights::validate() const {
  if (!(epsilon > 0.0)) throw ValidationError("loss weight epsilon must be > 0");
  if (active.empty()) throw ValidationError("no active loss weights");
  double sum = 0.0;
  for (LossTerm t : kAllLossTerms) {
    const double l = lambda[static_cast<std::size_t>(t)];
    if (!active.contains(t)) {
      if (l != 0.0) throw ValidationError("inactive loss term carries a weight");
      continue;
    }
    if (!(l > 0.0 && l <= 1.0)) throw ValidationError("loss weights must lie in (0, 1]");
    sum += l;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ValidationError("active loss weights must sum to 1");
}

// ---------------------------------------------------------------------------

namespace {

void require_finite_score(double v, const char* term) {
  if (!std::isfinite(v)) {
    throw DivergenceError(term, std::string("training diverged: non-finite discriminator score in ") + term);
  }
}

void require_same_length(std::span<const double> a, std::span<const double> b, const char* what) {
  if (a.size() != b.size() || a.empty()) {
    throw ValidationError(std::string(what) + ": score lists must be non-empty and equally long");
  }
}

}  // namespace

double gan_generator_loss(double d_low_on_fake_low, double d_full_on_fake_full) {
  require_finite_score(d_low_on_fake_low, "gan");
  require_finite_score(d_full_on_fake_full, "gan");
  const double a = d_low_on_fake_low - 1.0;
  const double b = d_full_on_fake_full - 1.0;
  return a * a + b * b;
}

double gan_generator_loss(std::span<const double> d_low_on_fake_low,
                          std::span<const double> d_full_on_fake_full) {
  require_same_length(d_low_on_fake_low, d_full_on_fake_full, "gan_generator_loss");
  double s = 0.0;
  for (std::size_t i = 0; i < d_low_on_fake_low.size(); ++i) {
    s += gan_generator_loss(d_low_on_fake_low[i], d_full_on_fake_full[i]);
  }
  return s / static_cast<double>(d_low_on_fake_low.size());
}

double discriminator_loss_O(double score_on_fake_low, double score_on_real_low) {
  require_finite_score(score_on_fake_low, "disc_O");
  require_finite_score(score_on_real_low, "disc_O");
  const double r = score_on_real_low - 1.0;
  return score_on_fake_low * score_on_fake_low + r * r;
}

double discriminator_loss_U(double score_on_fake_full, double score_on_real_full) {
  require_finite_score(score_on_fake_full, "disc_U");
  require_finite_score(score_on_real_full, "disc_U");
  const double r = score_on_real_full - 1.0;
  return score_on_fake_full * score_on_fake_full + r * r;
}

double discriminator_loss_O(std::span<const double> fake, std::span<const double> real) {
  require_same_length(fake, real, "discriminator_loss_O");
  double s = 0.0;
  for (std::size_t i = 0; i < fake.size(); ++i) s += discriminator_loss_O(fake[i], real[i]);
  return s / static_cast<double>(fake.size());
}

double discriminator_loss_U(std::span<const double> fake, std::span<const double> real) {
  require_same_length(fake, real, "discriminator_loss_U");
  double s = 0.0;
  for (std::size_t i = 0; i < fake.size(); ++i) s += discriminator_loss_U(fake[i], real[i]);
  return s / static_cast<double>(fake.size());
}

double mean_abs_error(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mean_abs_error");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return s / static_cast<double>(a.size());
}

double mean_sq_error(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mean_sq_error");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s / static_cast<double>(a.size());
}

Tensor mean_abs_error_grad(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mean_abs_error_grad");
  Tensor g = Tensor::zeros_like(a);
  const double inv = 1.0 / static_cast<double>(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    g[i] = d > 0.0 ? inv : (d < 0.0 ? -inv : 0.0);
  }
  return g;
}

Tensor mean_sq_error_grad(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mean_sq_error_grad");
  Tensor g = Tensor::zeros_like(a);
  const double scale = 2.0 / static_cast<double>(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) g[i] = scale * (a[i] - b[i]);
  return g;
}

double cycle_loss(const Tensor& recovered_low, const Tensor& real_low,
                  const Tensor& recovered_full, const Tensor& real_full) {
  return mean_abs_error(recovered_low, real_low) + mean_abs_error(recovered_full, real_full);
}

double identity_loss(const Tensor& same_full, const Tensor& real_full) {
  return mean_sq_error(same_full, real_full);
}

double supervised_loss(const Tensor& fake_low, const Tensor& real_low, const Tensor& fake_full,
                       const Tensor& real_full) {
  return mean_sq_error(fake_low, real_low) + mean_sq_error(fake_full, real_full);
}

// ---------------------------------------------------------------------------

namespace {

void check_stacks(std::span<const Tensor> a, std::span<const Tensor> b) {
  if (a.size() != b.size() || a.empty()) {
    throw ValidationError("plane SSIM: stacks must be non-empty and of equal depth");
  }
  for (std::size_t z = 0; z < a.size(); ++z) {
    if (a[z].channels() != 1) throw ValidationError("plane SSIM: slices must be single-channel");
    require_same_shape(a[z], a.front(), "plane SSIM stack");
    require_same_shape(a[z], b[z], "plane SSIM pair");
  }
}

// Sagittal plane at column x: rows z, cols y.
std::vector<double> sagittal(std::span<const Tensor> s, std::size_t x) {
  const std::size_t nz = s.size(), ny = s.front().height();
  std::vector<double> p(nz * ny);
  for (std::size_t z = 0; z < nz; ++z) {
    for (std::size_t y = 0; y < ny; ++y) p[z * ny + y] = s[z](0, y, x);
  }
  return p;
}

// Coronal plane at row y: rows z, cols x.
std::vector<double> coronal(std::span<const Tensor> s, std::size_t y) {
  const std::size_t nz = s.size(), nx = s.front().width();
  std::vector<double> p(nz * nx);
  for (std::size_t z = 0; z < nz; ++z) {
    for (std::size_t x = 0; x < nx; ++x) p[z * nx + x] = s[z](0, y, x);
  }
  return p;
}

}  // namespace

double mean_sagittal_ssim(std::span<const Tensor> a, std::span<const Tensor> b,
                          const SsimOptions& options) {
  check_stacks(a, b);
  const std::size_t nz = a.size(), ny = a.front().height(), nx = a.front().width();
  double s = 0.0;
  for (std::size_t x = 0; x < nx; ++x) s += ssim_2d(sagittal(a, x), sagittal(b, x), nz, ny, options);
  return s / static_cast<double>(nx);
}

double mean_coronal_ssim(std::span<const Tensor> a, std::span<const Tensor> b,
                         const SsimOptions& options) {
  check_stacks(a, b);
  const std::size_t nz = a.size(), ny = a.front().height(), nx = a.front().width();
  double s = 0.0;
  for (std::size_t y = 0; y < ny; ++y) s += ssim_2d(coronal(a, y), coronal(b, y), nz, nx, options);
  return s / static_cast<double>(ny);
}

double plane_ssim_loss(std::span<const Tensor> denoised, std::span<const Tensor> full,
                       const SsimOptions& options) {
  return (1.0 - mean_sagittal_ssim(denoised, full, options)) +
         (1.0 - mean_coronal_ssim(denoised, full, options));
}

double plane_ssim_loss_grad(std::span<const Tensor> denoised, std::span<const Tensor> full,
                            std::vector<Tensor>& grad, const SsimOptions& options) {
  check_stacks(denoised, full);
  const std::size_t nz = denoised.size(), ny = denoised.front().height(),
                    nx = denoised.front().width();
  grad.assign(nz, Tensor(1, ny, nx));

  double sag = 0.0;
  std::vector<double> g(nz * ny);
  for (std::size_t x = 0; x < nx; ++x) {
    sag += ssim_2d_grad(sagittal(denoised, x), sagittal(full, x), nz, ny, g, options);
    for (std::size_t z = 0; z < nz; ++z) {
      for (std::size_t y = 0; y < ny; ++y) grad[z](0, y, x) -= g[z * ny + y] / static_cast<double>(nx);
    }
  }
  double cor = 0.0;
  g.assign(nz * nx, 0.0);
  for (std::size_t y = 0; y < ny; ++y) {
    cor += ssim_2d_grad(coronal(denoised, y), coronal(full, y), nz, nx, g, options);
    for (std::size_t z = 0; z < nz; ++z) {
      for (std::size_t x = 0; x < nx; ++x) grad[z](0, y, x) -= g[z * nx + x] / static_cast<double>(ny);
    }
  }
  return (1.0 - sag / static_cast<double>(nx)) + (1.0 - cor / static_cast<double>(ny));
}

// ---------------------------------------------------------------------------

double total_loss(const LossBreakdown& breakdown, const LossWeights& weights) {
  double s = 0.0;
  for (LossTerm t : kAllLossTerms) {
    if (weights.active.contains(t)) s += weights[t] * breakdown.term(t);
  }
  return s;
}

LossWeights update_weights(const LossBreakdown& current, double epsilon, const LossSet& active) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw ValidationError("update_weights: epsilon must be positive and finite");
  }
  if (active.empty()) throw ValidationError("update_weights: no active loss terms");
  LossWeights w;
  w.epsilon = epsilon;
  w.active = active;
  double total = 0.0;
  for (LossTerm t : kAllLossTerms) {
    if (!active.contains(t)) continue;
    const double l = current.term(t);
    if (!std::isfinite(l)) {
      throw ValidationError("update_weights: loss '" + to_string(t) + "' is not finite");
    }
    if (l < 0.0) throw ValidationError("update_weights: loss '" + to_string(t) + "' is negative");
    const double inv = 1.0 / (l + epsilon);
    w.lambda[static_cast<std::size_t>(t)] = inv;
    total += inv;
  }
  for (double& l : w.lambda) l /= total;
  return w;
}

LossWeights update_weights(const LossBreakdown& current, double epsilon) {
  return update_weights(current, epsilon,
                        LossSet::of({LossTerm::Gan, LossTerm::Cyc, LossTerm::Identity, LossTerm::Sup}));
}

}  // namespace cdn
