// Copyright 2026 The cycledcn Authors.
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cycledcn/cli.hpp"
#include "cycledcn/error.hpp"
#include "cycledcn/report.hpp"
#include "cycledcn/volume_io.hpp"
#include "test_util.hpp"

using namespace cdn;
namespace fs = std::filesystem;

namespace {

int run(std::vector<std::string> args) {
  args.insert(args.begin(), "cycledcn");
  args.insert(args.begin() + 1, "-q");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("metrics csv round-trip keeps inf and missing values") {
  test::TempDir dir("csv");
  std::vector<MetricsReport> rows(2);
  rows[0] = {"case_000", "model, a", "1/4", std::numeric_limits<double>::infinity(), 1.0, 0.0, 1.0, 3.5, 0.0, 7};
  rows[1] = {"case_001", "low_dose", "1/4", 28.25, 0.75, 0.125, 1.5, std::nullopt, std::nullopt, 3};
  write_metrics_csv(dir / "m.csv", rows);
  const auto back = read_metrics_csv(dir / "m.csv");
  REQUIRE(back.size() == 2);
  CHECK(back[0].model_id == "model, a");
  CHECK(std::isinf(back[0].psnr));
  CHECK(back[0].cnr == 3.5);
  CHECK(back[0].hausdorff_slice == 7);
  CHECK_FALSE(back[1].cnr.has_value());
  CHECK(back[1].psnr == 28.25);
  std::ofstream(dir / "bad.csv") << "nope\n";
  CHECK_THROWS_AS(read_metrics_csv(dir / "bad.csv"), ValidationError);

  const auto j = nlohmann::json::parse(summary_json(rows, {{"k", "v"}}));
  CHECK(j["k"] == "v");
  CHECK(j["models"]["low_dose"]["psnr"]["mean"] == 28.25);
}

TEST_CASE("loss log rows") {
  EpochRecord r;
  r.epoch = 3;
  r.losses.sup = 0.5;
  r.weights = LossWeights::uniform(LossSet::all());
  const std::string row = loss_log_row(r);
  CHECK(row.rfind("3,", 0) == 0);
  std::size_t commas = 0;
  for (char c : row) commas += c == ',';
  std::size_t header_commas = 0;
  for (char c : loss_log_header()) header_commas += c == ',';
  CHECK(commas == header_commas);
  CHECK(validation_log_row(r).find("nan") != std::string::npos);
}

TEST_CASE("comparison table marks failed variants") {
  std::vector<VariantRow> rows(2);
  rows[0].variant = "full";
  rows[0].summary.psnr = {33.0, 0.5, 5};
  rows[1].variant = "only_sup";
  rows[1].status = "FAILED";
  rows[1].diagnostic = "diverged";
  const std::string md = comparison_markdown(rows);
  CHECK(md.find("full") != std::string::npos);
  CHECK(md.find("FAILED") != std::string::npos);
  const std::string svg = bar_chart_svg("psnr", {{"a", 1.0, 0.1}, {"b", 2.0, 0.2}});
  CHECK(svg.rfind("<svg", 0) == 0);
  const std::string prof = line_profile_svg("p", {{"x", {0.0, 1.0, 0.5}}});
  CHECK(prof.find("polyline") != std::string::npos);
}

TEST_CASE("command line end to end on a tiny dataset") {
  test::TempDir dir("cli");
  const std::string data = (dir / "data").string();
  REQUIRE(run({"generate", "--out", data, "--cases", "4", "--shape", "12,24,24", "--val", "1",
               "--test", "1", "--tumor-radius", "2,3", "--seed", "3"}) == kExitOk);
  CHECK(fs::exists(dir / "data" / "index.json"));
  CHECK(fs::exists(dir / "data" / "manifest.json"));
  const auto manifest = nlohmann::json::parse(slurp(dir / "data" / "manifest.json"));
  CHECK(manifest["dataset_fingerprint"].get<std::string>().size() == 64);
  CHECK(manifest.contains("source_revision"));

  // Same seed regenerates identical files.
  REQUIRE(run({"generate", "--out", (dir / "data2").string(), "--cases", "4", "--shape", "12,24,24",
               "--val", "1", "--test", "1", "--tumor-radius", "2,3", "--seed", "3"}) == kExitOk);
  CHECK(load_index(dir / "data").fingerprint() == load_index(dir / "data2").fingerprint());

  // Refuses a non-empty output directory without --force.
  CHECK(run({"generate", "--out", data, "--cases", "4"}) == kExitValidation);

  std::ofstream(dir / "cfg.yaml") << "epochs: 2\nsteps_per_epoch: 1\nbatch_size: 11\npatch_size: 16\n"
                                     "predictor_depth: 3\npredictor_width: 4\nconsistency_width: 4\n"
                                     "discriminator_depth: 2\ndiscriminator_width: 4\n";
  const std::string run_dir = (dir / "run").string();
  REQUIRE(run({"--config", (dir / "cfg.yaml").string(), "--set", "dataset=" + data, "train", "--out",
               run_dir}) == kExitOk);
  CHECK(fs::exists(dir / "run" / "model.ckpt"));
  CHECK(fs::exists(dir / "run" / "checkpoints" / "epoch_0002.ckpt"));
  CHECK(fs::exists(dir / "run" / "config.yaml"));
  const std::string log = slurp(dir / "run" / "loss_log.csv");
  CHECK(log.rfind(loss_log_header(), 0) == 0);
  CHECK(std::count(log.begin(), log.end(), '\n') == 3);

  // Resume extends the same run.
  REQUIRE(run({"--config", (dir / "cfg.yaml").string(), "--set", "dataset=" + data, "--set", "epochs=3",
               "train", "--out", run_dir, "--resume", (dir / "run" / "model.ckpt").string()}) == kExitOk);
  const std::string log3 = slurp(dir / "run" / "loss_log.csv");
  CHECK(std::count(log3.begin(), log3.end(), '\n') == 4);
  CHECK(log3.substr(0, log.size()) == log);
  // Without --dataset the checkpoint's config supplies it.
  REQUIRE(run({"--set", "epochs=4", "train", "--out", run_dir, "--resume",
               (dir / "run" / "model.ckpt").string()}) == kExitOk);
  const std::string log4 = slurp(dir / "run" / "loss_log.csv");
  CHECK(std::count(log4.begin(), log4.end(), '\n') == 5);
  CHECK(slurp(dir / "run" / "config.yaml").find("patch_size: 16") != std::string::npos);

  const std::string den = (dir / "den").string();
  REQUIRE(run({"denoise", "--checkpoint", (dir / "run" / "model.ckpt").string(), "--input", data, "--out",
               den}) == kExitOk);
  REQUIRE(list_volumes(den).size() == 1);

  const std::string ev = (dir / "eval").string();
  REQUIRE(run({"evaluate", "--denoised", den, "--reference", data, "--out", ev, "--model-id", "tiny"}) ==
          kExitOk);
  const auto rows = read_metrics_csv(dir / "eval" / "metrics.csv");
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].model_id == "tiny");
  CHECK(rows[1].model_id == "low_dose");
  CHECK(rows[0].cnr.has_value());
  CHECK(fs::exists(dir / "eval" / "plots" / "psnr.svg"));

  REQUIRE(run({"report", ev, ev, "--out", (dir / "rep").string()}) == kExitOk);
  CHECK(read_metrics_csv(dir / "rep" / "metrics.csv").size() == 4);
  CHECK(fs::exists(dir / "rep" / "comparison.md"));
}

TEST_CASE("command line error codes") {
  test::TempDir dir("cli_err");
  CHECK(run({}) == kExitValidation);
  CHECK(run({"frobnicate"}) == kExitValidation);
  CHECK(run({"generate"}) == kExitValidation);
  CHECK(run({"generate", "--out", (dir / "g").string(), "--cases", "3", "--val", "2", "--test", "1"}) ==
        kExitValidation);
  CHECK(run({"generate", "--out", (dir / "h").string(), "--fractions", "3/2"}) == kExitValidation);
  CHECK(run({"train", "--out", (dir / "t").string()}) == kExitValidation);
  CHECK(run({"--set", "epochs", "train", "--out", (dir / "t").string()}) == kExitValidation);
  CHECK(run({"--set", "dataset=" + (dir / "missing").string(), "train", "--out", (dir / "t2").string()}) ==
        kExitValidation);
  std::ofstream(dir / "junk.ckpt") << "junk";
  CHECK(run({"denoise", "--checkpoint", (dir / "junk.ckpt").string(), "--input", dir.path().string(), "--out",
             (dir / "d").string()}) == kExitValidation);
}
