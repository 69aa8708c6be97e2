// Copyright 2026 The cycledcn Authors.
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <fstream>
#include <set>

#include "cycledcn/config.hpp"
#include "cycledcn/dataset.hpp"
#include "cycledcn/error.hpp"
#include "cycledcn/hashing.hpp"
#include "cycledcn/phantom.hpp"
#include "cycledcn/volume_io.hpp"
#include "test_util.hpp"

using namespace cdn;

TEST_CASE("sha256 known digests") {
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  test::TempDir dir("hash");
  std::ofstream(dir / "f") << "abc";
  CHECK(sha256_file(dir / "f") == sha256_hex("abc"));
}

TEST_CASE("slice context replicates edge neighbours") {
  Volume v(Shape3{4, 3, 3});
  for (std::size_t z = 0; z < 4; ++z) {
    for (std::size_t i = 0; i < 9; ++i) v.data()[z * 9 + i] = 0.1f * static_cast<float>(z + 1);
  }
  const SliceContext c0 = make_context(v, 0, 2);
  REQUIRE(c0.neighbors.channels() == 4);
  // Order z-2, z-1, z+1, z+2 with clamping at the first slice.
  CHECK(c0.neighbors(0, 0, 0) == doctest::Approx(0.1));
  CHECK(c0.neighbors(1, 0, 0) == doctest::Approx(0.1));
  CHECK(c0.neighbors(2, 0, 0) == doctest::Approx(0.2));
  CHECK(c0.neighbors(3, 0, 0) == doctest::Approx(0.3));
  const SliceContext c3 = make_context(v, 3, 1);
  CHECK(c3.neighbors(0, 1, 1) == doctest::Approx(0.3));
  CHECK(c3.neighbors(1, 1, 1) == doctest::Approx(0.4));
  CHECK(make_context(v, 1, 0).neighbors.empty());
  const SliceContext cropped = make_context(v, 1, 1, Crop{1, 1, 2, 2});
  CHECK(cropped.target.height() == 2);
  CHECK_THROWS_AS(make_context(v, 4, 1), ValidationError);
  CHECK_THROWS_AS(make_context(v, 0, 1, Crop{2, 2, 2, 2}), ValidationError);
}

TEST_CASE("build_dataset yields one sample per slice") {
  std::mt19937_64 rng(1);
  const std::vector<Volume> full{test::random_volume(rng, {3, 4, 4}), test::random_volume(rng, {2, 4, 4})};
  const std::vector<Volume> low{test::random_volume(rng, {3, 4, 4}), test::random_volume(rng, {2, 4, 4})};
  const auto ds = build_dataset(full, low, 1);
  REQUIRE(ds.size() == 5);
  CHECK(ds[3].case_index == 1);
  CHECK(ds[3].low.z_index == 0);
  CHECK(ds[4].full.k() == 1);
}

TEST_CASE("case split is a seeded partition") {
  const Split a = split_cases(30, 2, 5, 7);
  const Split b = split_cases(30, 2, 5, 7);
  CHECK(a.train == b.train);
  CHECK(a.test == b.test);
  CHECK(a.val.size() == 2);
  CHECK(a.test.size() == 5);
  std::set<std::size_t> all(a.train.begin(), a.train.end());
  all.insert(a.val.begin(), a.val.end());
  all.insert(a.test.begin(), a.test.end());
  CHECK(all.size() == 30);
  const Split c = split_cases(30, 2, 5, 8);
  CHECK(c.test != a.test);
  CHECK_THROWS_AS(split_cases(5, 2, 3, 0), ValidationError);
}

TEST_CASE("dataset index round-trip and hash verification") {
  test::TempDir dir("index");
  PhantomSpec spec;
  spec.shape = {4, 8, 8};
  const Volume full = generate_phantom(spec);
  const Volume low = simulate_low_dose(full, quarter_dose(), 50.0, 1);
  save_volume(full, dir / "full.cdnvol");
  save_volume(low, dir / "low.cdnvol");
  DatasetIndex idx;
  idx.root = dir.path();
  idx.seed = 3;
  idx.dose_labels = {"1/4"};
  CaseRecord r;
  r.id = "case_000";
  r.split = "test";
  r.full = "full.cdnvol";
  r.low["1/4"] = "low.cdnvol";
  r.hashes["full.cdnvol"] = sha256_file(dir / "full.cdnvol");
  r.hashes["low.cdnvol"] = sha256_file(dir / "low.cdnvol");
  r.tumors.push_back({{1.0, 2.0, 3.0}, 1.5, 3.0});
  idx.cases.push_back(r);
  save_index(idx, dir / "index.json");

  const DatasetIndex back = load_index(dir.path(), true);
  CHECK(back.cases.size() == 1);
  CHECK(back.cases[0].tumors[0].radius == 1.5);
  CHECK(back.fingerprint() == idx.fingerprint());
  CHECK(back.members("test") == std::vector<std::size_t>{0});

  const CasePair pair = load_case(back, 0, "1/4");
  CHECK(pair.full.max_value() == doctest::Approx(1.0f));
  CHECK(pair.low.max_value() <= 1.0f);
  CHECK(pair.tumors.size() == 1);
  CHECK_THROWS_AS(load_case(back, 0, "1/10"), ValidationError);

  save_volume(full, dir / "low.cdnvol");  // contents no longer match the recorded hash
  CHECK_NOTHROW(load_index(dir.path(), false));
  CHECK_THROWS_AS(load_index(dir.path(), true), ValidationError);
  CHECK_THROWS(load_index(dir / "nothing"));
}

TEST_CASE("config defaults and yaml round-trip") {
  const TrainConfig d;
  CHECK(d.learning_rate_G == 2e-4);
  CHECK(d.learning_rate_D == 1e-4);
  CHECK(d.beta1 == 0.5);
  CHECK(d.beta2 == 0.999);
  CHECK(d.enabled_losses == LossSet::all());
  CHECK(d.dose_fraction.label == "1/4");

  TrainConfig c = config_from_yaml(R"(
dataset: /data/x
dose_fraction: 1/10
epochs: 3
batch_size: 11
seed: 42
enabled_losses: [sup, cyc]
neighbor_k: 2
fuse_mode: network
predictor_depth: 4
weight_overrides:
  - from_epoch: 0
    to_epoch: 2
    weights: {sup: 3, cyc: 1}
)");
  CHECK(c.dataset == "/data/x");
  CHECK(c.dose_fraction.value == doctest::Approx(0.1));
  CHECK(c.seed == 42);
  CHECK(c.enabled_losses == LossSet::of({LossTerm::Sup, LossTerm::Cyc}));
  CHECK(c.model.neighbor_k == 2);
  CHECK(c.model.fuse_mode == FuseMode::Network);
  REQUIRE(c.weight_overrides.size() == 1);
  CHECK(c.weight_overrides[0].weights.at(LossTerm::Sup) == 3.0);

  const TrainConfig again = config_from_yaml(config_to_yaml(c));
  CHECK(config_to_yaml(again) == config_to_yaml(c));
  CHECK(again.learning_rate_G == c.learning_rate_G);

  apply_config_override(c, "epochs", "9");
  CHECK(c.epochs == 9);
  apply_config_override(c, "enabled_losses", "[sup]");
  CHECK(c.enabled_losses.count() == 1);
}

TEST_CASE("config validation rejects bad values") {
  CHECK_THROWS_AS(config_from_yaml("epochz: 3"), ValidationError);
  CHECK_THROWS_AS(config_from_yaml("epochs: -1"), ValidationError);
  CHECK_THROWS_AS(config_from_yaml("batch_size: 8"), ValidationError);  // ssim planes need 11 slices
  CHECK_NOTHROW(config_from_yaml("batch_size: 8\nenabled_losses: [sup, gan]"));
  CHECK_THROWS_AS(config_from_yaml("neighbor_k: 0\nfuse_mode: network"), ValidationError);
  CHECK_THROWS_AS(config_from_yaml("patch_size: 8"), ValidationError);
  CHECK_THROWS_AS(config_from_yaml("enabled_losses: []"), ValidationError);
  CHECK_THROWS_AS(config_from_yaml("enabled_losses: [perceptual]"), ValidationError);
  CHECK_THROWS_AS(config_from_yaml("learning_rate_G: -1"), ValidationError);
  CHECK_THROWS_AS(config_from_yaml("dose_fraction: 2"), ValidationError);
  CHECK_THROWS_AS(config_from_yaml("[1, 2]"), ValidationError);
  CHECK_THROWS_AS(config_from_yaml("enabled_losses: [sup]\nweight_overrides:\n  - {from_epoch: 0, to_epoch: 1, weights: {gan: 1}}"),
                  ValidationError);
  CHECK_THROWS_AS(config_from_yaml("weight_overrides:\n  - {from_epoch: 2, to_epoch: 2, weights: {sup: 1}}"),
                  ValidationError);
}
