// Copyright 2026 The cycledcn Authors.
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include "cycledcn/error.hpp"
#include "cycledcn/phantom.hpp"
#include "cycledcn/volume_io.hpp"
#include "test_util.hpp"

using namespace cdn;

TEST_CASE("tensor arithmetic and channel concat") {
  Tensor a(2, 3, 4, 1.0), b(2, 3, 4, 2.0);
  Tensor c = a + b;
  CHECK(c(1, 2, 3) == 3.0);
  c -= a;
  CHECK(c(0, 0, 0) == 2.0);
  c *= 0.5;
  CHECK(c(0, 1, 1) == 1.0);
  const Tensor parts[] = {a, b};
  Tensor cat = concat_channels(parts);
  CHECK(cat.channels() == 4);
  CHECK(cat(3, 2, 3) == 2.0);
  CHECK_THROWS_AS(a += Tensor(1, 3, 4), ValidationError);
}

TEST_CASE("volume slices round-trip") {
  std::mt19937_64 rng(1);
  Volume v = test::random_volume(rng, {3, 4, 5});
  Tensor s = v.slice(1);
  CHECK(s.height() == 4);
  CHECK(s.width() == 5);
  CHECK(s(0, 2, 3) == doctest::Approx(v.at(1, 2, 3)));
  Tensor z(1, 4, 5, 0.25);
  v.set_slice(2, z);
  CHECK(v.at(2, 3, 4) == 0.25f);
  CHECK_THROWS_AS(v.set_slice(0, Tensor(1, 5, 4)), ValidationError);
}

TEST_CASE("format_real keeps full precision") {
  const double x = 0.1 + 0.2;
  CHECK(std::stod(format_real(x)) == x);
}

TEST_CASE("dose fraction parsing") {
  CHECK(DoseFraction::parse("1/4").value == doctest::Approx(0.25));
  CHECK(DoseFraction::parse("1/4").label == "1/4");
  CHECK(DoseFraction::parse("0.1").value == doctest::Approx(0.1));
  CHECK(DoseFraction::parse("1/24").file_tag() == "1-24");
  CHECK_THROWS_AS(DoseFraction::parse("abc"), ValidationError);
  CHECK_THROWS_AS(DoseFraction::parse("2"), ValidationError);
  CHECK_THROWS_AS(DoseFraction::parse("0"), ValidationError);
}

TEST_CASE("phantom generation is deterministic and non-negative") {
  PhantomSpec spec;
  spec.shape = {16, 32, 32};
  spec.seed = 5;
  spec.tumors.push_back({{8.0, 16.0, 16.0}, 3.0, 3.0});
  const Volume a = generate_phantom(spec);
  const Volume b = generate_phantom(spec);
  CHECK(std::equal(a.data().begin(), a.data().end(), b.data().begin()));
  CHECK(a.min_value() >= 0.0f);
  // Tumor core is hotter than its surroundings.
  CHECK(a.at(8, 16, 16) > 2.0f * a.at(8, 16, 24));
  spec.seed = 6;
  const Volume c = generate_phantom(spec);
  CHECK_FALSE(std::equal(a.data().begin(), a.data().end(), c.data().begin()));
}

TEST_CASE("phantom spec validation") {
  PhantomSpec spec;
  spec.shape = {8, 8, 8};
  spec.tumors.push_back({{20.0, 4.0, 4.0}, 2.0, 3.0});
  CHECK_THROWS_AS(generate_phantom(spec), ValidationError);
  spec.tumors.clear();
  spec.background_activity = 0.0;
  CHECK_THROWS_AS(generate_phantom(spec), ValidationError);
}

TEST_CASE("low-dose simulation preserves the mean and scales variance") {
  // Poisson(f*c*x)/(f*c) has mean x and variance x/(f*c).
  Volume full(Shape3{8, 64, 64}, {}, 2.0f);
  const double counts = 50.0;
  const Volume low = simulate_low_dose(full, quarter_dose(), counts, 11);
  double mean = 0.0, var = 0.0;
  for (float v : low.data()) mean += v;
  mean /= static_cast<double>(low.size());
  for (float v : low.data()) var += (v - mean) * (v - mean);
  var /= static_cast<double>(low.size() - 1);
  CHECK(mean == doctest::Approx(2.0).epsilon(0.01));
  CHECK(var == doctest::Approx(2.0 / (0.25 * counts)).epsilon(0.05));
  CHECK(low.meta().at("dose_fraction") == "1/4");

  const Volume again = simulate_low_dose(full, quarter_dose(), counts, 11);
  CHECK(std::equal(low.data().begin(), low.data().end(), again.data().begin()));
  Volume zero(Shape3{2, 2, 2});
  const Volume zl = simulate_low_dose(zero, tenth_dose(), counts, 1);
  CHECK(zl.max_value() == 0.0f);
}

TEST_CASE("low-dose noise grows as the fraction shrinks") {
  Volume full(Shape3{4, 64, 64}, {}, 1.0f);
  const auto spread = [&](const DoseFraction& f) {
    const Volume v = simulate_low_dose(full, f, 50.0, 3);
    double s = 0.0;
    for (float x : v.data()) s += (x - 1.0) * (x - 1.0);
    return s;
  };
  CHECK(spread(quarter_dose()) < spread(tenth_dose()));
  CHECK(spread(tenth_dose()) < spread(twenty_fourth_dose()));
}

TEST_CASE("min-max normalisation and inverse") {
  std::mt19937_64 rng(2);
  const Volume v = test::random_volume(rng, {2, 5, 5}, 3.0f, 9.0f);
  auto [n, scale] = min_max_normalize(v);
  CHECK(n.min_value() == doctest::Approx(0.0));
  CHECK(n.max_value() == doctest::Approx(1.0));
  const Volume back = denormalize(n, scale);
  for (std::size_t i = 0; i < v.size(); ++i) CHECK(back.data()[i] == doctest::Approx(v.data()[i]).epsilon(1e-5));
  CHECK_THROWS_AS(min_max_normalize(Volume(Shape3{2, 2, 2}, {}, 1.0f)), ValidationError);
  const Volume clamped = apply_scale(v, {4.0, 8.0}, true);
  CHECK(clamped.min_value() == 0.0f);
  CHECK(clamped.max_value() == 1.0f);
}

TEST_CASE("tumor box covers the sphere and stays in bounds") {
  const Tumor t{{5.0, 5.0, 5.0}, 2.0, 3.0};
  const Box3 b = tumor_box(t, {10, 10, 10});
  CHECK(b.z0 == 3);
  CHECK(b.z1 == 8);
  const Box3 wide = tumor_box(t, {7, 10, 10}, 5.0);
  CHECK(wide.z0 == 0);
  CHECK(wide.z1 == 7);
}

TEST_CASE("random phantom spec places tumors inside the volume") {
  PhantomSpec base;
  base.shape = {32, 64, 64};
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const PhantomSpec s = random_phantom_spec(base, seed, 2, 3.0, 3.0, 5.0);
    REQUIRE(s.tumors.size() == 2);
    for (const auto& t : s.tumors) {
      CHECK(t.radius >= 3.0);
      CHECK(t.radius <= 5.0);
      CHECK(t.center[0] - t.radius >= 0.0);
      CHECK(t.center[0] + t.radius <= 31.0);
    }
  }
}

TEST_CASE("volume file round-trip and corruption") {
  test::TempDir dir("vol");
  std::mt19937_64 rng(3);
  Volume v = test::random_volume(rng, {3, 4, 5});
  v.set_spacing({2.0, 1.5, 1.5});
  v.meta()["case_id"] = "abc";
  const auto p = dir / "a.cdnvol";
  save_volume(v, p);
  const Volume r = load_volume(p);
  CHECK(r.shape() == v.shape());
  CHECK(r.spacing() == v.spacing());
  CHECK(r.meta().at("case_id") == "abc");
  CHECK(std::equal(v.data().begin(), v.data().end(), r.data().begin()));
  CHECK(list_volumes(dir.path()).size() == 1);

  std::string bytes;
  {
    std::ifstream in(p, std::ios::binary);
    bytes.assign(std::istreambuf_iterator<char>(in), {});
  }
  {
    std::string bad = bytes;
    bad[0] = 'X';
    std::ofstream(dir / "bad.cdnvol", std::ios::binary) << bad;
    CHECK_THROWS_AS(load_volume(dir / "bad.cdnvol"), BadMagicError);
  }
  {
    std::ofstream(dir / "short.cdnvol", std::ios::binary) << bytes.substr(0, bytes.size() - 4);
    CHECK_THROWS_AS(load_volume(dir / "short.cdnvol"), SizeMismatchError);
  }
  {
    std::string nan = bytes;
    const float q = std::nanf("");
    std::memcpy(nan.data() + nan.size() - 4, &q, 4);
    std::ofstream(dir / "nan.cdnvol", std::ios::binary) << nan;
    CHECK_THROWS_AS(load_volume(dir / "nan.cdnvol"), NonFinitePayloadError);
  }
  CHECK_THROWS_AS(load_volume(dir / "missing.cdnvol"), FileFormatError);
}
