// Copyright 2026 The cycledcn Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "cycledcn/metrics.hpp"
#include "cycledcn/trainer.hpp"

namespace cdn {

// Per-case metrics CSV. Infinite PSNR is written as "inf", missing optional
// metrics as empty fields.
void write_metrics_csv(const std::filesystem::path& path, const std::vector<MetricsReport>& reports);
std::vector<MetricsReport> read_metrics_csv(const std::filesystem::path& path);

/// JSON object {model_id: {metric: {mean, std, count}}} plus `extra` fields.
std::string summary_json(const std::vector<MetricsReport>& reports,
                         const std::map<std::string, std::string>& extra = {});

// Loss log.
std::string loss_log_header();
std::string loss_log_row(const EpochRecord& record);
/// Appends one row, writing the header first when the file is new.
void append_loss_log(const std::filesystem::path& path, const EpochRecord& record);
std::string validation_log_header();
std::string validation_log_row(const EpochRecord& record);

/// One row of the ablation comparison; status is "ok" or "FAILED".
struct VariantRow {
  std::string variant;
  std::string status = "ok";
  std::string diagnostic;
  ReportSummary summary;
};

/// Markdown table with mean ± std columns per metric.
std::string comparison_markdown(const std::vector<VariantRow>& rows);
void write_comparison_csv(const std::filesystem::path& path, const std::vector<VariantRow>& rows);

struct BarSeries {
  std::string label;
  double mean = 0.0;
  double std = 0.0;
};

/// Static SVG charts.
std::string bar_chart_svg(const std::string& title, const std::vector<BarSeries>& bars);
std::string line_profile_svg(const std::string& title,
                             const std::vector<std::pair<std::string, std::vector<double>>>& series);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace cdn
