// Copyright 2026 The cycledcn Authors.
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <set>

#include "cycledcn/error.hpp"
#include "cycledcn/metrics.hpp"
#include "cycledcn/phantom.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace cdn;

namespace {

Volume square_volume(std::size_t nz, std::size_t n, std::size_t lo, std::size_t hi, float in = 1.0f) {
  Volume v(Shape3{nz, n, n}, {}, 0.1f);
  for (std::size_t z = 0; z < nz; ++z) {
    for (std::size_t y = lo; y < hi; ++y) {
      for (std::size_t x = lo; x < hi; ++x) v.at(z, y, x) = in;
    }
  }
  return v;
}

std::vector<double> as_doubles(const Volume& v) { return {v.data().begin(), v.data().end()}; }

}  // namespace

TEST_CASE("psnr and nrmse against oracles") {
  std::mt19937_64 rng(1);
  for (int rep = 0; rep < 20; ++rep) {
    const Tensor a = test::random_tensor(rng, 1, 16, 16), b = test::random_tensor(rng, 1, 16, 16);
    const auto x = oracle::flat(a), r = oracle::flat(b);
    CHECK(test::rel_err(psnr(x, r), oracle::psnr(x, r, 1.0)) < 1e-10);
    CHECK(test::rel_err(psnr(x, r, 2.5), oracle::psnr(x, r, 2.5)) < 1e-10);
    CHECK(test::rel_err(nrmse(x, r), oracle::nrmse(x, r)) < 1e-10);
  }
  const std::vector<double> z{0.0, 0.5}, one{0.1, 0.5};
  CHECK(std::isinf(psnr(z, z)));
  // MSE 0.005 -> 10 log10(1/0.005).
  CHECK(psnr(z, one) == doctest::Approx(10.0 * std::log10(200.0)));
  CHECK(nrmse(z, z) == 0.0);
  CHECK_THROWS_AS(psnr(z, std::vector<double>{1.0}), ValidationError);
  CHECK_THROWS_AS(nrmse(z, std::vector<double>{0.0, 0.0}), ValidationError);
}

TEST_CASE("volume ssim averages axial slices") {
  std::mt19937_64 rng(2);
  const Volume a = test::random_volume(rng, {3, 12, 12});
  const Volume b = test::random_volume(rng, {3, 12, 12});
  double want = 0.0;
  for (std::size_t z = 0; z < 3; ++z) {
    const auto sa = oracle::flat(a.slice(z)), sb = oracle::flat(b.slice(z));
    want += oracle::ssim(sa, sb, 12, 12);
  }
  CHECK(ssim_index(a, b) == doctest::Approx(want / 3.0).epsilon(1e-9));
  CHECK(ssim_index(a, a) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("roi segmentation and cnr") {
  Volume v = square_volume(9, 24, 8, 16, 3.0f);
  const Box3 box{2, 8, 8, 7, 16, 16};
  const RoiMasks m = segment_rois(v, box, 0.5, 2);
  CHECK(m.tumor_count() == 5 * 8 * 8);
  CHECK(m.background_count() == 9 * 12 * 12 - 5 * 8 * 8);
  for (std::size_t i = 0; i < v.size(); ++i) CHECK_FALSE((m.tumor[i] && m.background[i]));
  // Constant background: zero std.
  Volume flat = v;
  for (std::size_t i = 0; i < flat.size(); ++i) {
    if (!m.tumor[i]) flat.data()[i] = 0.1f;
  }
  CHECK_THROWS_AS(cnr(flat, m), ValidationError);
  std::mt19937_64 rng(4);
  std::normal_distribution<float> n(0.0f, 0.05f);
  for (auto& x : v.data()) x += n(rng);
  double st = 0, sb = 0;
  std::size_t nt = 0, nb = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (m.tumor[i]) st += v.data()[i], ++nt;
    if (m.background[i]) sb += v.data()[i], ++nb;
  }
  const double mt = st / nt, mb = sb / nb;
  double var = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (m.background[i]) var += (v.data()[i] - mb) * (v.data()[i] - mb);
  }
  CHECK(cnr(v, m) == doctest::Approx(std::abs(mt - mb) / std::sqrt(var / nb)).epsilon(1e-9));
  CHECK_THROWS_AS(segment_rois(v, Box3{0, 0, 0, 0, 4, 4}), ValidationError);
  CHECK_THROWS_AS(segment_rois(Volume(Shape3{4, 4, 4}), Box3{0, 0, 0, 2, 2, 2}), ValidationError);
}

TEST_CASE("sobel magnitude and edge preservation index") {
  // Horizontal ramp of slope 1: interior Sobel response is 8.
  std::vector<double> ramp(10 * 10);
  for (std::size_t y = 0; y < 10; ++y) {
    for (std::size_t x = 0; x < 10; ++x) ramp[y * 10 + x] = static_cast<double>(x);
  }
  const auto m = sobel_magnitude(ramp, 10, 10);
  CHECK(m[5 * 10 + 5] == doctest::Approx(8.0));
  const std::vector<double> flat(100, 0.4);
  for (double v : sobel_magnitude(flat, 10, 10)) CHECK(v == 0.0);

  const Volume a = square_volume(2, 20, 5, 15);
  CHECK(epi(a, a) == doctest::Approx(1.0).epsilon(1e-12));
  Volume half = a;
  for (auto& x : half.data()) x *= 0.5f;
  CHECK(epi(half, a) == doctest::Approx(0.5));
  CHECK_THROWS_AS(epi(a, Volume(Shape3{2, 20, 20}, {}, 0.3f)), ValidationError);
}

TEST_CASE("canny finds the outline of a square") {
  const Volume v = square_volume(1, 32, 10, 22);
  const EdgeSet e = canny_edges(v, 0);
  REQUIRE_FALSE(e.points.empty());
  CHECK(std::is_sorted(e.points.begin(), e.points.end()));
  CHECK(std::adjacent_find(e.points.begin(), e.points.end()) == e.points.end());
  for (const auto& p : e.points) {
    const bool near_row = p.row >= 8 && p.row <= 23;
    const bool near_col = p.col >= 8 && p.col <= 23;
    CHECK((near_row && near_col));
    const bool on_outline = std::abs(p.row - 10) <= 1 || std::abs(p.row - 21) <= 1 ||
                            std::abs(p.col - 10) <= 1 || std::abs(p.col - 21) <= 1;
    CHECK(on_outline);
  }
  const Volume flat(Shape3{1, 20, 20}, {}, 0.5f);
  CHECK(canny_edges(flat, 0).points.empty());
  CHECK_THROWS_AS(canny_edges(v, 1), ValidationError);
  CHECK_THROWS_AS(canny_edges(Volume(Shape3{1, 8, 8}), 0), ValidationError);
}

TEST_CASE("canny edges shift with the image") {
  const Volume a = square_volume(1, 40, 10, 24);
  const Volume b = square_volume(1, 40, 13, 27);
  const EdgeSet ea = canny_edges(a, 0), eb = canny_edges(b, 0);
  REQUIRE(ea.points.size() == eb.points.size());
  for (std::size_t i = 0; i < ea.points.size(); ++i) {
    CHECK(eb.points[i].row == ea.points[i].row + 3);
    CHECK(eb.points[i].col == ea.points[i].col + 3);
  }
  CHECK(hausdorff(ea, eb) == doctest::Approx(std::sqrt(18.0)));
}

TEST_CASE("hausdorff matches the all-pairs oracle") {
  std::mt19937_64 rng(5);
  for (int rep = 0; rep < 30; ++rep) {
    std::uniform_int_distribution<int> coord(-50, 300), count(1, 120);
    std::vector<EdgePoint> a(count(rng)), b(count(rng));
    for (auto& p : a) p = {coord(rng), coord(rng)};
    for (auto& p : b) p = {coord(rng), coord(rng)};
    CHECK(hausdorff(a, b) == oracle::hausdorff(a, b));
  }
  const std::vector<EdgePoint> one{{3, 4}}, origin{{0, 0}};
  CHECK(hausdorff(one, origin) == 5.0);
  CHECK(hausdorff(one, one) == 0.0);
  CHECK_THROWS_AS(hausdorff(one, std::vector<EdgePoint>{}), ValidationError);
}

TEST_CASE("evaluate_case fixed point") {
  const Volume v = square_volume(4, 24, 6, 18, 0.9f);
  EvaluateOptions o;
  o.tumor_box = Box3{0, 5, 5, 4, 19, 19};
  Volume noisy = v;
  std::mt19937_64 rng(8);
  std::normal_distribution<float> n(0.0f, 0.02f);
  for (auto& x : noisy.data()) x = std::clamp(x + n(rng), 0.0f, 1.0f);
  const MetricsReport r = evaluate_case(noisy, noisy, noisy, o);
  CHECK(std::isinf(r.psnr));
  CHECK(r.ssim == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(r.nrmse == 0.0);
  CHECK(r.epi == doctest::Approx(1.0).epsilon(1e-9));
  REQUIRE(r.hausdorff.has_value());
  CHECK(*r.hausdorff == 0.0);
  REQUIRE(r.cnr.has_value());
  CHECK(r.hausdorff_slice == 2);
  const MetricsReport plain = evaluate_case(noisy, noisy, v);
  CHECK_FALSE(plain.cnr.has_value());
  CHECK_THROWS_AS(evaluate_case(noisy, Volume(Shape3{4, 24, 23}), v), ValidationError);
}

TEST_CASE("summaries and the paired t-test") {
  const std::vector<double> xs{1.0, 2.0, 3.0, std::nan("")};
  const Stat s = summarize(xs);
  CHECK(s.count == 3);
  CHECK(s.mean == doctest::Approx(2.0));
  CHECK(s.std == doctest::Approx(1.0));

  const std::vector<double> a{1.2, 2.4, 3.1, 4.8, 5.0, 6.3}, b{1.0, 2.5, 2.7, 4.1, 4.9, 5.6};
  const TTestResult t = paired_t_test(a, b);
  double md = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) md += a[i] - b[i];
  md /= a.size();
  double sd = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sd += (a[i] - b[i] - md) * (a[i] - b[i] - md);
  sd = std::sqrt(sd / (a.size() - 1));
  const double want_t = md / (sd / std::sqrt(6.0));
  CHECK(t.t == doctest::Approx(want_t));
  CHECK(t.dof == 5.0);
  CHECK(t.p_value == doctest::Approx(oracle::t_two_sided_p(want_t, 5.0)).epsilon(1e-6));
  CHECK_THROWS_AS(paired_t_test(std::vector<double>{1.0}, std::vector<double>{1.0}), ValidationError);

  std::vector<MetricsReport> reps(2);
  reps[0].psnr = 30.0;
  reps[1].psnr = 32.0;
  reps[0].cnr = 4.0;
  const ReportSummary sum = summarize(reps);
  CHECK(sum.psnr.mean == doctest::Approx(31.0));
  CHECK(sum.cnr.count == 1);
  CHECK(sum.hausdorff.count == 0);
}
