// Copyright 2026 The cycledcn Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cycledcn/config.hpp"
#include "cycledcn/dataset.hpp"
#include "cycledcn/metrics.hpp"
#include "cycledcn/report.hpp"
#include "cycledcn/trainer.hpp"

namespace cdn {

/// Exit codes of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitRuntime = 2;

/// Throws ValidationError when `dir` exists and is non-empty, unless force is set.
void prepare_out_dir(const std::filesystem::path& dir, bool force);

/// Writes manifest.json (experiment id, command, resolved config, dataset
/// fingerprint, source revision, output layout) into out_dir.
void write_manifest(const std::filesystem::path& out_dir, const std::string& command,
                    const std::string& resolved_config, const std::string& dataset_fingerprint,
                    const std::vector<std::string>& layout);

std::string source_revision();

struct GenerateOptions {
  std::filesystem::path out;
  std::size_t cases = 30;
  std::vector<std::string> fractions{"1/4"};
  Shape3 shape{64, 128, 128};
  double counts_per_unit = 50.0;
  int tumors = 1;
  double tumor_contrast = 3.0;
  double tumor_radius_min = 4.0;
  double tumor_radius_max = 7.0;
  double cortex_amplitude = 1.0;
  double smoothness = 1.0;
  std::size_t n_val = 2;
  std::size_t n_test = 5;
  std::uint64_t seed = 0;
  bool force = false;
};

/// Phantoms, low-dose simulations (normalised per pair on the full-dose
/// scale) and index.json with the split and content hashes.
DatasetIndex cmd_generate(const GenerateOptions& options);

/// Trains into out_dir: manifest.json, config.yaml, loss_log.csv,
/// validation.csv, checkpoints/. Resumes from `resume` when given.
TrainingState cmd_train(const TrainConfig& config, const std::filesystem::path& out_dir, bool force,
                        const std::optional<std::filesystem::path>& resume = std::nullopt);

struct DenoiseOptions {
  std::string split = "test";  // for dataset inputs
  bool force = false;
};

/// Input: a CDNVOL1 file, a directory of them, or a dataset directory
/// (index.json). Returns the written files.
std::vector<std::filesystem::path> cmd_denoise(const std::filesystem::path& checkpoint,
                                               const std::filesystem::path& input,
                                               const std::filesystem::path& out,
                                               const DenoiseOptions& options = {});

struct EvaluateCommandOptions {
  std::string model_id = "model";
  std::string dose_label;         // defaults to the denoised volumes' metadata
  bool include_low = true;        // add low-dose baseline rows when available
  bool plots = true;
  bool force = false;
};

/// Matches denoised volumes to references by file stem / case id and writes
/// metrics.csv, summary.json and plots into out.
std::vector<MetricsReport> cmd_evaluate(const std::filesystem::path& denoised,
                                        const std::filesystem::path& reference,
                                        const std::filesystem::path& out,
                                        const EvaluateCommandOptions& options = {});

/// The full model and the five ablation variants, as configs.
std::vector<std::pair<std::string, TrainConfig>> ablation_variants(const TrainConfig& base);

/// Train, denoise the test split and evaluate every variant. Failed runs are
/// kept in the table with status FAILED.
std::vector<VariantRow> cmd_ablate(const TrainConfig& base, const std::filesystem::path& out,
                                   bool force, const std::vector<std::string>& only = {});

/// Merges metrics.csv files (or run directories holding one) into out.
std::vector<MetricsReport> cmd_report(const std::vector<std::filesystem::path>& runs,
                                      const std::filesystem::path& out, bool force);

/// Entry point; returns the process exit code.
int run_cli(int argc, const char* const* argv);

}  // namespace cdn
