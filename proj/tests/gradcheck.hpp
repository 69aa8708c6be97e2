// Copyright 2026 The cycledcn Authors.
// SPDX-License-Identifier: Apache-2.0

// Central-difference verification of the analytic parameter gradients. A
// coordinate is skipped when the +h or -h perturbation changes which side of a
// kink (ReLU, leaky ReLU, clamp, |.|) any intermediate value falls on; there
// the finite difference straddles a non-differentiable point.

#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "cycledcn/losses.hpp"
#include "cycledcn/nets.hpp"
#include "cycledcn/trainer.hpp"

namespace cdn::test {

struct GradCheckStats {
  std::string name;
  std::size_t checked = 0;
  std::size_t skipped = 0;
  std::size_t failures = 0;
  double max_rel = 0.0;
  double worst_analytic = 0.0;  // values at the coordinate with max_rel
  double worst_fd = 0.0;
  // Same comparison with the plain two-point difference at step h.
  std::size_t plain_failures = 0;
  double plain_max_rel = 0.0;
};

struct GradCheckSetup {
  CycleModel model;
  Batch batch;
};

/// Depth-3 / width-8 predictor, 2-layer discriminators, random interior inputs.
inline GradCheckSetup gradcheck_setup(FuseMode mode, std::size_t slices, std::size_t side,
                                      std::uint64_t seed) {
  ModelConfig mc;
  mc.predictor_depth = 3;
  mc.predictor_width = 8;
  mc.neighbor_k = 1;
  mc.consistency_width = 8;
  mc.discriminator_depth = 2;
  mc.discriminator_width = 8;
  mc.fuse_mode = mode;
  GradCheckSetup s{CycleModel::create(mc, seed), {}};
  std::mt19937_64 rng(seed * 7 + 1);
  // Move the zero tail and identity fusion off their special initial values,
  // keeping |noise| small so outputs stay inside (0, 1).
  std::normal_distribution<double> jitter(0.0, 0.05);
  for (auto& v : s.model.predictor.params().values()) v += jitter(rng);
  for (auto& v : s.model.consistency.params().values()) v += jitter(rng);
  std::uniform_real_distribution<double> u(0.3, 0.7);
  const auto plane = [&](std::size_t c) {
    Tensor t(c, side, side);
    for (auto& v : t.data()) v = u(rng);
    return t;
  };
  for (std::size_t i = 0; i < slices; ++i) {
    PairedSample p;
    p.low = {plane(1), plane(2), i};
    p.full = {plane(1), plane(2), i};
    s.batch.samples.push_back(std::move(p));
  }
  return s;
}

namespace detail {

inline void push_signs(std::vector<std::int8_t>& out, const Tensor& t) {
  for (double v : t.data()) out.push_back(static_cast<std::int8_t>((v > 0.0) - (v < 0.0)));
}

inline void push_pass(std::vector<std::int8_t>& out, const PassCache& c) {
  for (const auto& t : c.noise.pre) push_signs(out, t);
  for (auto b : c.in_range) out.push_back(static_cast<std::int8_t>(b));
}

inline void push_disc(std::vector<std::int8_t>& out, const Discriminator& d, const Tensor& x) {
  Discriminator::Cache c;
  d.forward(x, &c);
  for (const auto& t : c.pre) push_signs(out, t);
}

}  // namespace detail

/// Signs of every kinked intermediate that `term` depends on.
inline std::vector<std::int8_t> kink_pattern(const CycleModel& m, const Batch& b, LossTerm term) {
  std::vector<std::int8_t> out;
  const NoisePredictor& np = m.predictor;
  const ConsistencyNet& cn = m.consistency;
  const bool uses_low = term != LossTerm::Identity;
  const bool uses_full = term != LossTerm::SsimPlanes;
  for (const auto& s : b.samples) {
    ConsistencyNet::EncodeCache eo, eu;
    const Tensor co = cn.encode(s.low.neighbors, &eo);
    const Tensor cu = cn.encode(s.full.neighbors, &eu);
    if (uses_low) {
      detail::push_signs(out, eo.pre1);
      detail::push_signs(out, eo.pre2);
    }
    if (uses_full) {
      detail::push_signs(out, eu.pre1);
      detail::push_signs(out, eu.pre2);
    }
    PassCache ff, fl;
    const Tensor fake_full = generator_pass(np, cn, s.low.target, &co, Direction::Extract, &ff);
    const Tensor fake_low = generator_pass(np, cn, s.full.target, &cu, Direction::Add, &fl);
    switch (term) {
      case LossTerm::Identity: {
        PassCache id;
        generator_pass(np, cn, s.full.target, &cu, Direction::Extract, &id);
        detail::push_pass(out, id);
        break;
      }
      case LossTerm::SsimPlanes:
        detail::push_pass(out, ff);
        break;
      case LossTerm::Sup:
        detail::push_pass(out, ff);
        detail::push_pass(out, fl);
        break;
      case LossTerm::Gan:
        detail::push_pass(out, ff);
        detail::push_pass(out, fl);
        detail::push_disc(out, m.d_low, fake_low);
        detail::push_disc(out, m.d_full, fake_full);
        break;
      case LossTerm::Cyc: {
        PassCache rl, rf;
        const Tensor rec_low = generator_pass(np, cn, fake_full, &co, Direction::Add, &rl);
        const Tensor rec_full = generator_pass(np, cn, fake_low, &cu, Direction::Extract, &rf);
        for (const PassCache* c : {&ff, &fl, &rl, &rf}) detail::push_pass(out, *c);
        detail::push_signs(out, rec_low - s.low.target);
        detail::push_signs(out, rec_full - s.full.target);
        break;
      }
    }
  }
  return out;
}

inline double rel_diff(double a, double b) {
  return std::abs(a - b) / std::max(std::abs(a), std::abs(b));
}

/// `fd` is the extrapolated difference, `plain` the two-point one at step h.
inline void compare(GradCheckStats& st, double analytic, double fd, double plain, double tol) {
  if (std::abs(analytic) <= 1e-6 && std::abs(fd) <= 1e-6) return;
  ++st.checked;
  const double plain_rel = rel_diff(analytic, plain);
  st.plain_max_rel = std::max(st.plain_max_rel, plain_rel);
  if (plain_rel > tol) ++st.plain_failures;
  const double rel = rel_diff(analytic, fd);
  if (rel > st.max_rel) {
    st.max_rel = rel;
    st.worst_analytic = analytic;
    st.worst_fd = fd;
  }
  if (rel > tol) ++st.failures;
}

/// Central differences at steps h and h/2 combined as (4 D(h/2) - D(h)) / 3,
/// which cancels the h^2 truncation term. Coordinates where any of the four
/// probes changes the kink pattern are skipped.
template <typename F, typename P>
void probe(GradCheckStats& st, std::span<double> params, std::size_t i, double analytic, double h,
           double tol, const F& f, const P& pattern, const std::vector<std::int8_t>& base) {
  static constexpr double kOffsets[4] = {1.0, -1.0, 0.5, -0.5};
  const double keep = params[i];
  double value[4];
  bool smooth = true;
  for (int j = 0; j < 4; ++j) {
    params[i] = keep + kOffsets[j] * h;
    value[j] = f();
    smooth = smooth && pattern() == base;
  }
  params[i] = keep;
  if (!smooth) {
    ++st.skipped;
    return;
  }
  const double d_h = (value[0] - value[1]) / (2.0 * h);
  const double d_half = (value[2] - value[3]) / h;
  compare(st, analytic, (4.0 * d_half - d_h) / 3.0, d_h, tol);
}

/// Checks d(term)/d(theta) for the predictor and consistency parameters.
inline GradCheckStats check_generator_term(GradCheckSetup& s, LossTerm term, double h, double tol) {
  GradCheckStats st;
  st.name = to_string(term);
  const LossSet only = LossSet::of({term});
  const LossWeights w = LossWeights::uniform(only);
  const GeneratorGradients g = generator_gradients(s.model, only, w, s.batch);
  const auto f = [&] { return generator_losses(s.model, only, s.batch).term(term); };
  const auto pattern = [&] { return kink_pattern(s.model, s.batch, term); };
  const auto base = pattern();
  const auto sweep = [&](std::span<double> params, const std::vector<double>& analytic) {
    for (std::size_t i = 0; i < params.size(); ++i) probe(st, params, i, analytic[i], h, tol, f, pattern, base);
  };
  sweep(s.model.predictor.params().values(), g.predictor);
  sweep(s.model.consistency.params().values(), g.consistency);
  return st;
}

/// Checks the least-squares discriminator objective on fixed fakes.
inline GradCheckStats check_discriminator(GradCheckSetup& s, bool low_domain, double h, double tol) {
  GradCheckStats st;
  st.name = low_domain ? "disc_O" : "disc_U";
  Discriminator& d = low_domain ? s.model.d_low : s.model.d_full;
  std::vector<Tensor> fakes, reals;
  for (const auto& p : s.batch.samples) {
    const SliceContext& src = low_domain ? p.full : p.low;
    fakes.push_back(low_domain ? add_noise_Pprime(s.model.predictor, s.model.consistency, src)
                               : denoise_P(s.model.predictor, s.model.consistency, src));
    reals.push_back(low_domain ? p.low.target : p.full.target);
  }
  const DiscriminatorGradients g = discriminator_gradients(d, fakes, reals, low_domain);
  const auto f = [&] {
    double total = 0.0;
    for (std::size_t i = 0; i < fakes.size(); ++i) {
      const double a = mean_score(d.forward(fakes[i])), b = mean_score(d.forward(reals[i]));
      total += low_domain ? discriminator_loss_O(a, b) : discriminator_loss_U(a, b);
    }
    return total / static_cast<double>(fakes.size());
  };
  const auto pattern = [&] {
    std::vector<std::int8_t> out;
    for (std::size_t i = 0; i < fakes.size(); ++i) {
      detail::push_disc(out, d, fakes[i]);
      detail::push_disc(out, d, reals[i]);
    }
    return out;
  };
  const auto base = pattern();
  const auto params = d.params().values();
  for (std::size_t i = 0; i < params.size(); ++i) probe(st, params, i, g.grads[i], h, tol, f, pattern, base);
  return st;
}

}  // namespace cdn::test
