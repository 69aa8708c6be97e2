// Copyright 2026 The cycledcn Authors.
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <limits>

#include "cycledcn/error.hpp"
#include "cycledcn/losses.hpp"
#include "cycledcn/ssim.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace cdn;

TEST_CASE("loss term names round-trip") {
  for (LossTerm t : kAllLossTerms) CHECK(parse_loss_term(to_string(t)) == t);
  CHECK_THROWS_AS(parse_loss_term("perceptual"), ValidationError);
  LossSet s = LossSet::all();
  CHECK(s.count() == 5);
  s.erase(LossTerm::Sup);
  CHECK_FALSE(s.contains(LossTerm::Sup));
  CHECK(s.names().size() == 4);
  CHECK(LossSet{}.empty());
}

TEST_CASE("least-squares adversarial losses") {
  CHECK(gan_generator_loss(1.0, 1.0) == 0.0);
  CHECK(gan_generator_loss(0.0, 0.5) == doctest::Approx(1.25));
  CHECK(discriminator_loss_O(0.0, 1.0) == 0.0);
  CHECK(discriminator_loss_O(1.0, 0.0) == doctest::Approx(2.0));
  CHECK(discriminator_loss_U(0.5, 0.5) == doctest::Approx(0.5));
  const std::vector<double> a{1.0, 0.0}, b{1.0, 1.0};
  CHECK(gan_generator_loss(a, b) == doctest::Approx(0.5));
  CHECK(discriminator_loss_O(a, b) == doctest::Approx(0.5));
  CHECK_THROWS_AS(gan_generator_loss(std::numeric_limits<double>::quiet_NaN(), 1.0), DivergenceError);
  CHECK_THROWS_AS(gan_generator_loss(a, std::vector<double>{1.0}), ValidationError);
}

TEST_CASE("pixel losses against elementwise oracles") {
  std::mt19937_64 rng(3);
  for (int rep = 0; rep < 20; ++rep) {
    const Tensor a = test::random_tensor(rng, 1, 16, 16), b = test::random_tensor(rng, 1, 16, 16);
    const Tensor c = test::random_tensor(rng, 1, 16, 16), d = test::random_tensor(rng, 1, 16, 16);
    CHECK(test::rel_err(mean_abs_error(a, b), oracle::mae(a, b)) < 1e-10);
    CHECK(test::rel_err(mean_sq_error(a, b), oracle::mse(a, b)) < 1e-10);
    CHECK(test::rel_err(cycle_loss(a, b, c, d), oracle::mae(a, b) + oracle::mae(c, d)) < 1e-10);
    CHECK(test::rel_err(identity_loss(a, b), oracle::mse(a, b)) < 1e-10);
    CHECK(test::rel_err(supervised_loss(a, b, c, d), oracle::mse(a, b) + oracle::mse(c, d)) < 1e-10);
  }
  CHECK(cycle_loss(Tensor(1, 2, 2, 0.3), Tensor(1, 2, 2, 0.3), Tensor(1, 2, 2), Tensor(1, 2, 2)) == 0.0);
  CHECK_THROWS_AS(mean_abs_error(Tensor(1, 2, 2), Tensor(1, 2, 3)), ValidationError);
}

TEST_CASE("pixel loss gradients") {
  std::mt19937_64 rng(4);
  const Tensor a = test::random_tensor(rng, 1, 4, 4), b = test::random_tensor(rng, 1, 4, 4);
  const Tensor gs = mean_sq_error_grad(a, b);
  const Tensor ga = mean_abs_error_grad(a, b);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(gs[i] == doctest::Approx(2.0 * (a[i] - b[i]) / 16.0));
    CHECK(ga[i] == doctest::Approx((a[i] > b[i] ? 1.0 : -1.0) / 16.0));
  }
  CHECK(mean_abs_error_grad(a, a)[0] == 0.0);
}

TEST_CASE("ssim matches the windowed oracle") {
  std::mt19937_64 rng(5);
  for (auto [h, w] : {std::pair{11, 11}, {16, 13}, {20, 24}}) {
    const Tensor x = test::random_tensor(rng, 1, h, w);
    Tensor y = x;
    for (auto& v : y.data()) v = std::clamp(v + std::normal_distribution<double>(0, 0.1)(rng), 0.0, 1.0);
    const double got = ssim_2d(x.data(), y.data(), h, w);
    CHECK(got == doctest::Approx(oracle::ssim(oracle::flat(x), oracle::flat(y), h, w)).epsilon(1e-10));
  }
  const Tensor x = test::random_tensor(rng, 1, 12, 12);
  CHECK(ssim_2d(x.data(), x.data(), 12, 12) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(ssim_2d(x.data(), x.data(), 10, 14), ValidationError);
  CHECK(ssim_cs_2d(x.data(), x.data(), 12, 12) == doctest::Approx(1.0));
}

TEST_CASE("ssim gradient matches finite differences") {
  std::mt19937_64 rng(6);
  const std::size_t h = 12, w = 13;
  Tensor x = test::random_tensor(rng, 1, h, w);
  const Tensor y = test::random_tensor(rng, 1, h, w);
  std::vector<double> g(h * w);
  ssim_2d_grad(x.data(), y.data(), h, w, g);
  for (std::size_t i = 0; i < h * w; i += 3) {
    const double keep = x[i];
    x[i] = keep + 1e-5;
    const double up = ssim_2d(x.data(), y.data(), h, w);
    x[i] = keep - 1e-5;
    const double dn = ssim_2d(x.data(), y.data(), h, w);
    x[i] = keep;
    const double fd = (up - dn) / 2e-5;
    if (std::abs(fd) < 1e-8) continue;
    CHECK(test::fd_close(g[i], fd, 1e-5));
  }
}

TEST_CASE("plane ssim loss reslices sagittal and coronal planes") {
  std::mt19937_64 rng(7);
  std::vector<Tensor> a, b;
  for (int z = 0; z < 11; ++z) {
    a.push_back(test::random_tensor(rng, 1, 12, 13));
    b.push_back(test::random_tensor(rng, 1, 12, 13));
  }
  CHECK(plane_ssim_loss(a, a) == doctest::Approx(0.0).epsilon(1e-12));
  // Sagittal oracle: plane at x has rows z, cols y.
  double sag = 0.0;
  for (std::size_t x = 0; x < 13; ++x) {
    std::vector<double> pa, pb;
    for (int z = 0; z < 11; ++z) {
      for (std::size_t y = 0; y < 12; ++y) {
        pa.push_back(a[z](0, y, x));
        pb.push_back(b[z](0, y, x));
      }
    }
    sag += oracle::ssim(pa, pb, 11, 12);
  }
  CHECK(mean_sagittal_ssim(a, b) == doctest::Approx(sag / 13.0).epsilon(1e-10));
  double cor = 0.0;
  for (std::size_t y = 0; y < 12; ++y) {
    std::vector<double> pa, pb;
    for (int z = 0; z < 11; ++z) {
      for (std::size_t x = 0; x < 13; ++x) {
        pa.push_back(a[z](0, y, x));
        pb.push_back(b[z](0, y, x));
      }
    }
    cor += oracle::ssim(pa, pb, 11, 13);
  }
  CHECK(mean_coronal_ssim(a, b) == doctest::Approx(cor / 12.0).epsilon(1e-10));
  CHECK(plane_ssim_loss(a, b) == doctest::Approx(2.0 - sag / 13.0 - cor / 12.0).epsilon(1e-10));

  std::vector<Tensor> g;
  const double v = plane_ssim_loss_grad(a, b, g);
  CHECK(v == doctest::Approx(plane_ssim_loss(a, b)).epsilon(1e-12));
  for (auto [z, y, x] : {std::tuple{0, 0, 0}, {5, 6, 7}, {10, 11, 12}, {3, 2, 9}}) {
    const double keep = a[z](0, y, x);
    a[z](0, y, x) = keep + 1e-5;
    const double up = plane_ssim_loss(a, b);
    a[z](0, y, x) = keep - 1e-5;
    const double dn = plane_ssim_loss(a, b);
    a[z](0, y, x) = keep;
    CHECK(test::fd_close(g[z](0, y, x), (up - dn) / 2e-5, 1e-5));
  }
  std::vector<Tensor> shallow(a.begin(), a.begin() + 10), shallow_b(b.begin(), b.begin() + 10);
  CHECK_THROWS_AS(plane_ssim_loss(shallow, shallow_b), ValidationError);
}

TEST_CASE("dynamic weights follow the inverse-loss rule") {
  LossBreakdown l;
  l.gan = 1.0;
  l.cyc = 0.5;
  l.identity = 0.25;
  l.sup = 0.125;
  l.ssim_planes = 2.0;
  const LossWeights w = update_weights(l, 1e-8, LossSet::all());
  // Independent evaluation of the normalised reciprocal.
  double z = 0.0;
  for (LossTerm t : kAllLossTerms) z += 1.0 / (l.term(t) + 1e-8);
  for (LossTerm t : kAllLossTerms) CHECK(w[t] == doctest::Approx(1.0 / (l.term(t) + 1e-8) / z).epsilon(1e-12));
  w.validate();
  CHECK(w[LossTerm::Sup] > w[LossTerm::Identity]);
  CHECK(w[LossTerm::SsimPlanes] < w[LossTerm::Gan]);

  const LossWeights four = update_weights(l, 1e-8);
  CHECK(four[LossTerm::SsimPlanes] == 0.0);
  CHECK(four.active.count() == 4);

  LossBreakdown zeros;
  const LossWeights zw = update_weights(zeros, 1e-8, LossSet::all());
  for (LossTerm t : kAllLossTerms) CHECK(zw[t] == doctest::Approx(0.2));

  l.sup = -1.0;
  CHECK_THROWS_AS(update_weights(l, 1e-8, LossSet::all()), ValidationError);
  l.sup = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(update_weights(l, 1e-8, LossSet::all()), ValidationError);
  l.sup = 0.1;
  CHECK_THROWS_AS(update_weights(l, 0.0, LossSet::all()), ValidationError);
}

TEST_CASE("uniform weights and weighted total") {
  const LossSet s = LossSet::of({LossTerm::Sup, LossTerm::Cyc});
  const LossWeights w = LossWeights::uniform(s);
  CHECK(w[LossTerm::Sup] == 0.5);
  CHECK(w[LossTerm::Gan] == 0.0);
  LossBreakdown b;
  b.sup = 2.0;
  b.cyc = 4.0;
  b.gan = 100.0;
  CHECK(total_loss(b, w) == doctest::Approx(3.0));
  LossBreakdown nan;
  nan.cyc = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(nan.require_finite(), DivergenceError);
}
