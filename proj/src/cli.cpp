// Copyright 2026 The cycledcn Authors.
// SPDX-License-Identifier: Apache-2.0

#include "cycledcn/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "cycledcn/checkpoint.hpp"
#include "cycledcn/error.hpp"
#include "cycledcn/hashing.hpp"
#include "cycledcn/log.hpp"
#include "cycledcn/phantom.hpp"
#include "cycledcn/volume_io.hpp"

#ifndef CYCLEDCN_SOURCE_REVISION
#define CYCLEDCN_SOURCE_REVISION "unknown"
#endif
#ifndef CYCLEDCN_VERSION
#define CYCLEDCN_VERSION "0.0.0"
#endif

namespace cdn {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t x = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// FNV-1a, so noise streams do not depend on the standard library's std::hash.
std::uint64_t label_hash(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) h = (h ^ c) * 0x100000001b3ULL;
  return h;
}

std::string case_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "case_%03zu", i);
  return buf;
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

bool is_dataset_dir(const fs::path& p) {
  return fs::is_directory(p) && fs::exists(p / kIndexFileName);
}

/// Min-max normalises volumes that do not carry a normalisation record.
Volume ensure_normalized(const Volume& v, const std::string& what) {
  const bool tagged = v.meta().count("norm_max") > 0;
  if (tagged && v.min_value() >= 0.0f && v.max_value() <= 1.0f) return v;
  log_warn(what + " is not normalised; applying its own min-max scale");
  return min_max_normalize(v).first;
}

std::vector<fs::path> volume_inputs(const fs::path& p) {
  if (fs::is_directory(p)) return list_volumes(p);
  if (!fs::exists(p)) throw ValidationError("input " + p.string() + " does not exist");
  return {p};
}

void write_metric_plots(const fs::path& dir, const std::vector<MetricsReport>& reports) {
  std::vector<std::string> models;
  for (const auto& r : reports) {
    if (std::find(models.begin(), models.end(), r.model_id) == models.end()) models.push_back(r.model_id);
  }
  std::map<std::string, ReportSummary> by_model;
  for (const auto& m : models) {
    std::vector<MetricsReport> rows;
    std::copy_if(reports.begin(), reports.end(), std::back_inserter(rows),
                 [&](const MetricsReport& r) { return r.model_id == m; });
    by_model[m] = summarize(rows);
  }
  const std::vector<std::pair<std::string, Stat ReportSummary::*>> metrics = {
      {"psnr", &ReportSummary::psnr}, {"ssim", &ReportSummary::ssim}, {"nrmse", &ReportSummary::nrmse},
      {"epi", &ReportSummary::epi},   {"cnr", &ReportSummary::cnr},   {"hausdorff", &ReportSummary::hausdorff}};
  for (const auto& [name, member] : metrics) {
    std::vector<BarSeries> bars;
    bool any = false;
    for (const auto& m : models) {
      const Stat& s = by_model[m].*member;
      if (s.count > 0) any = true;
      bars.push_back({m, s.mean, s.std});
    }
    if (any) write_text(dir / "plots" / (name + ".svg"), bar_chart_svg(name + " (mean ± std)", bars));
  }
}

std::vector<VariantRow> rows_by_model(const std::vector<MetricsReport>& reports) {
  std::vector<VariantRow> rows;
  for (const auto& r : reports) {
    if (std::none_of(rows.begin(), rows.end(), [&](const VariantRow& v) { return v.variant == r.model_id; })) {
      rows.push_back({r.model_id, "ok", "", {}});
    }
  }
  for (auto& row : rows) {
    std::vector<MetricsReport> sel;
    std::copy_if(reports.begin(), reports.end(), std::back_inserter(sel),
                 [&](const MetricsReport& r) { return r.model_id == row.variant; });
    row.summary = summarize(sel);
  }
  return rows;
}

}  // namespace

std::string source_revision() { return CYCLEDCN_SOURCE_REVISION; }

void prepare_out_dir(const fs::path& dir, bool force) {
  if (fs::exists(dir)) {
    if (!fs::is_directory(dir)) throw ValidationError(dir.string() + " exists and is not a directory");
    if (!fs::is_empty(dir) && !force) {
      throw ValidationError("output directory " + dir.string() +
                            " is not empty; pass --force to overwrite");
    }
  }
  fs::create_directories(dir);
}

void write_manifest(const fs::path& out_dir, const std::string& command,
                    const std::string& resolved_config, const std::string& fingerprint,
                    const std::vector<std::string>& layout) {
  json m;
  m["experiment_id"] = sha256_hex(command + "\n" + resolved_config + "\n" + fingerprint).substr(0, 16);
  m["command"] = command;
  m["config"] = resolved_config;
  m["dataset_fingerprint"] = fingerprint;
  m["source_revision"] = source_revision();
  m["version"] = CYCLEDCN_VERSION;
  m["created_utc"] = utc_now();
  m["layout"] = layout;
  write_text(out_dir / "manifest.json", m.dump(2) + "\n");
}

// ---------------------------------------------------------------------------

DatasetIndex cmd_generate(const GenerateOptions& o) {
  if (o.cases < 1) throw ValidationError("generate: --cases must be >= 1");
  if (o.n_val + o.n_test >= o.cases) {
    throw ValidationError("generate: validation + test cases must leave at least one training case");
  }
  if (o.tumors < 0) throw ValidationError("generate: --tumors must be >= 0");
  std::vector<DoseFraction> fractions;
  for (const auto& f : o.fractions) fractions.push_back(DoseFraction::parse(f));
  if (fractions.empty()) throw ValidationError("generate: at least one dose fraction is required");
  prepare_out_dir(o.out, o.force);

  json opts = {{"cases", o.cases},
               {"fractions", o.fractions},
               {"shape", {o.shape.nz, o.shape.ny, o.shape.nx}},
               {"counts_per_unit", o.counts_per_unit},
               {"tumors", o.tumors},
               {"tumor_contrast", o.tumor_contrast},
               {"tumor_radius", {o.tumor_radius_min, o.tumor_radius_max}},
               {"cortex_amplitude", o.cortex_amplitude},
               {"smoothness", o.smoothness},
               {"n_val", o.n_val},
               {"n_test", o.n_test},
               {"seed", o.seed}};
  const std::vector<std::string> layout = {"index.json", "case_NNN/full.cdnvol",
                                           "case_NNN/low_<fraction>.cdnvol"};
  write_manifest(o.out, "generate", opts.dump(), "pending", layout);

  PhantomSpec base;
  base.shape = o.shape;
  base.cortex_amplitude = o.cortex_amplitude;
  base.smoothness = o.smoothness;
  const Split split = split_cases(o.cases, o.n_val, o.n_test, o.seed);
  std::vector<std::string> membership(o.cases, "train");
  for (auto i : split.val) membership[i] = "val";
  for (auto i : split.test) membership[i] = "test";

  DatasetIndex index;
  index.root = o.out;
  index.seed = o.seed;
  index.counts_per_unit = o.counts_per_unit;
  for (const auto& f : fractions) index.dose_labels.push_back(f.label);
  for (std::size_t i = 0; i < o.cases; ++i) {
    const std::uint64_t case_seed = mix_seed(o.seed, i);
    const PhantomSpec spec = random_phantom_spec(base, case_seed, o.tumors, o.tumor_contrast,
                                                 o.tumor_radius_min, o.tumor_radius_max);
    const Volume full = generate_phantom(spec);
    const IntensityScale scale{full.min_value(), full.max_value()};
    CaseRecord rec;
    rec.id = case_name(i);
    rec.split = membership[i];
    rec.tumors = spec.tumors;
    Volume full_n = apply_scale(full, scale, true);
    full_n.meta()["case_id"] = rec.id;
    rec.full = rec.id + "/full" + kVolumeExtension;
    save_volume(full_n, o.out / rec.full);
    rec.hashes[rec.full] = sha256_file(o.out / rec.full);
    for (const auto& f : fractions) {
      const Volume low = simulate_low_dose(full, f, o.counts_per_unit, mix_seed(case_seed, label_hash(f.label)));
      Volume low_n = apply_scale(low, scale, true);
      low_n.meta()["case_id"] = rec.id;
      const std::string rel = rec.id + "/low_" + f.file_tag() + kVolumeExtension;
      save_volume(low_n, o.out / rel);
      rec.low[f.label] = rel;
      rec.hashes[rel] = sha256_file(o.out / rel);
    }
    index.cases.push_back(std::move(rec));
    log_info("generated " + case_name(i) + " (" + membership[i] + ")");
  }
  save_index(index, o.out / kIndexFileName);
  write_manifest(o.out, "generate", opts.dump(), index.fingerprint(), layout);
  return index;
}

TrainingState cmd_train(const TrainConfig& config, const fs::path& out, bool force,
                        const std::optional<fs::path>& resume) {
  config.validate();
  // A resumed run keeps the checkpoint's config; only the run length, threading and an explicit
  // dataset path come from the caller.
  TrainingState state = resume ? load_checkpoint(*resume) : TrainingState::create(config);
  if (resume) {
    state.config.epochs = config.epochs;
    state.config.deterministic = config.deterministic;
    state.config.threads = config.threads;
    if (!config.dataset.empty()) state.config.dataset = config.dataset;
  }
  const TrainConfig& cfg = state.config;
  if (cfg.dataset.empty()) throw ValidationError("train: no dataset given (config key 'dataset')");
  if (resume) {
    fs::create_directories(out);
  } else {
    prepare_out_dir(out, force);
  }
  const DatasetIndex index = load_index(cfg.dataset);
  const std::string label = cfg.dose_fraction.label;
  const std::string yaml = config_to_yaml(cfg);
  write_manifest(out, "train", yaml, index.fingerprint(),
                 {"config.yaml", "loss_log.csv", "validation.csv", "checkpoints/epoch_NNNN.ckpt",
                  "model.ckpt"});
  write_text(out / "config.yaml", yaml);

  const std::vector<CasePair> train_cases = load_split(index, label, "train");
  const std::vector<CasePair> val_cases = load_split(index, label, "val", cfg.val_max_cases);

  const fs::path loss_log = out / "loss_log.csv";
  const fs::path val_log = out / "validation.csv";
  {
    std::ostringstream losses, vals;
    losses << loss_log_header() << '\n';
    vals << validation_log_header() << '\n';
    for (const auto& r : state.log) {
      losses << loss_log_row(r) << '\n';
      vals << validation_log_row(r) << '\n';
    }
    write_text(loss_log, losses.str());
    write_text(val_log, vals.str());
  }

  TrainHooks hooks;
  hooks.on_epoch = [&](const TrainingState&, const EpochRecord& rec) {
    append_loss_log(loss_log, rec);
    std::ofstream(val_log, std::ios::app) << validation_log_row(rec) << '\n';
  };
  hooks.on_checkpoint = [&](const TrainingState& s) {
    char name[32];
    std::snprintf(name, sizeof name, "epoch_%04zu.ckpt", s.epoch);
    save_checkpoint(s, out / "checkpoints" / name);
  };
  train(state, train_cases, val_cases, hooks);
  save_checkpoint(state, out / "model.ckpt");
  return state;
}

std::vector<fs::path> cmd_denoise(const fs::path& checkpoint, const fs::path& input, const fs::path& out,
                                  const DenoiseOptions& options) {
  const TrainingState state = load_checkpoint(checkpoint);
  const std::string label = state.config.dose_fraction.label;
  std::vector<fs::path> written;

  const auto warn_dose = [&](const Volume& v, const std::string& name) {
    const auto it = v.meta().find("dose_fraction");
    if (it != v.meta().end() && it->second != label) {
      log_warn(name + " has dose fraction " + it->second + " but the model was trained for " + label);
    }
  };

  if (is_dataset_dir(input)) {
    prepare_out_dir(out, options.force);
    const DatasetIndex index = load_index(input);
    const auto members = index.members(options.split);
    if (members.empty()) throw ValidationError("dataset has no '" + options.split + "' cases");
    for (std::size_t i : members) {
      const CasePair pair = load_case(index, i, label);
      Volume d = denoise_volume(state.model, pair.low);
      d.meta()["case_id"] = pair.id;
      const fs::path dst = out / (pair.id + kVolumeExtension);
      save_volume(d, dst);
      written.push_back(dst);
    }
    return written;
  }

  const auto files = volume_inputs(input);
  const bool single_file = !fs::is_directory(input) && out.extension() == kVolumeExtension;
  if (!single_file) prepare_out_dir(out, options.force);
  for (const auto& f : files) {
    const Volume v = load_volume(f);
    warn_dose(v, f.filename().string());
    const Volume d = denoise_volume(state.model, ensure_normalized(v, f.filename().string()));
    const fs::path dst = single_file ? out : out / f.filename();
    if (single_file && fs::exists(dst) && !options.force) {
      throw ValidationError(dst.string() + " exists; pass --force to overwrite");
    }
    save_volume(d, dst);
    written.push_back(dst);
  }
  return written;
}

std::vector<MetricsReport> cmd_evaluate(const fs::path& denoised, const fs::path& reference,
                                        const fs::path& out, const EvaluateCommandOptions& o) {
  const auto files = volume_inputs(denoised);
  if (files.empty()) throw ValidationError("no denoised volumes found in " + denoised.string());
  prepare_out_dir(out, o.force);
  std::vector<MetricsReport> reports;
  std::optional<DatasetIndex> index;
  if (is_dataset_dir(reference)) index = load_index(reference);

  bool profile_done = false;
  for (const auto& f : files) {
    const Volume den = load_volume(f);
    const std::string id = f.stem().string();
    EvaluateOptions eo;
    Volume full, low;
    std::vector<Tumor> tumors;
    std::string dose = o.dose_label;
    if (index) {
      const auto it = std::find_if(index->cases.begin(), index->cases.end(),
                                   [&](const CaseRecord& c) { return c.id == id; });
      if (it == index->cases.end()) throw ValidationError("case " + id + " is not in the reference dataset");
      if (dose.empty()) {
        const auto m = den.meta().find("dose_fraction");
        dose = m != den.meta().end() ? m->second : index->dose_labels.front();
      }
      CasePair pair = load_case(*index, static_cast<std::size_t>(it - index->cases.begin()), dose);
      full = std::move(pair.full);
      low = std::move(pair.low);
      tumors = pair.tumors;
    } else {
      const fs::path ref = fs::is_directory(reference) ? reference / f.filename() : reference;
      if (!fs::exists(ref)) throw ValidationError("no reference volume for " + f.filename().string());
      full = load_volume(ref);
      low = full;
    }
    if (!tumors.empty()) {
      eo.tumor_box = tumor_box(tumors.front(), full.shape(), 1.0);
      eo.hausdorff_slice = static_cast<std::size_t>(std::lround(tumors.front().center[0]));
    }

    MetricsReport r = evaluate_case(den, low, full, eo);
    r.case_id = id;
    r.model_id = o.model_id;
    if (r.dose_fraction.empty()) r.dose_fraction = dose;
    reports.push_back(r);
    if (index && o.include_low) {
      MetricsReport b = evaluate_case(low, low, full, eo);
      b.case_id = id;
      b.model_id = "low_dose";
      if (b.dose_fraction.empty()) b.dose_fraction = dose;
      reports.push_back(b);
    }
    if (o.plots && !profile_done && !tumors.empty()) {
      const Tumor& t = tumors.front();
      const auto z = static_cast<std::size_t>(std::lround(t.center[0]));
      const auto y = static_cast<std::size_t>(std::lround(t.center[1]));
      std::vector<std::pair<std::string, std::vector<double>>> series;
      for (const auto& [name, vol] : {std::pair<std::string, const Volume*>{"full dose", &full},
                                      {"low dose", &low}, {o.model_id, &den}}) {
        std::vector<double> row(full.shape().nx);
        for (std::size_t x = 0; x < row.size(); ++x) row[x] = vol->at(z, y, x);
        series.emplace_back(name, std::move(row));
      }
      write_text(out / "plots" / ("profile_" + id + ".svg"),
                 line_profile_svg("Line profile through the tumor, " + id, series));
      profile_done = true;
    }
  }
  write_metrics_csv(out / "metrics.csv", reports);
  write_text(out / "summary.json", summary_json(reports, {{"source_revision", source_revision()}}));
  if (o.plots) write_metric_plots(out, reports);
  return reports;
}

std::vector<std::pair<std::string, TrainConfig>> ablation_variants(const TrainConfig& base) {
  std::vector<std::pair<std::string, TrainConfig>> v;
  TrainConfig full = base;
  if (full.model.neighbor_k == 0) full.model.neighbor_k = 1;
  full.model.fuse_mode = FuseMode::ElementwiseAdd;
  v.emplace_back("full", full);

  TrainConfig no_sup = full;
  no_sup.enabled_losses.erase(LossTerm::Sup);
  v.emplace_back("without_sup", no_sup);

  TrainConfig only_sup = full;
  only_sup.enabled_losses = LossSet::of({LossTerm::Sup});
  v.emplace_back("only_sup", only_sup);

  TrainConfig no_nb = full;
  no_nb.model.neighbor_k = 0;
  v.emplace_back("without_neighbors", no_nb);

  TrainConfig net = full;
  net.model.fuse_mode = FuseMode::Network;
  v.emplace_back("network_fuse", net);

  TrainConfig no_ssim = full;
  no_ssim.enabled_losses.erase(LossTerm::SsimPlanes);
  v.emplace_back("without_ssim", no_ssim);

  for (auto& [name, cfg] : v) {
    // Overrides naming a term the variant disabled are dropped.
    for (auto& o : cfg.weight_overrides) {
      std::erase_if(o.weights, [&](const auto& kv) { return !cfg.enabled_losses.contains(kv.first); });
    }
    std::erase_if(cfg.weight_overrides, [](const WeightOverride& o) {
      double s = 0.0;
      for (const auto& kv : o.weights) s += kv.second;
      return !(s > 0.0);
    });
  }
  return v;
}

std::vector<VariantRow> cmd_ablate(const TrainConfig& base, const fs::path& out, bool force,
                                   const std::vector<std::string>& only) {
  base.validate();
  prepare_out_dir(out, force);
  const DatasetIndex index = load_index(base.dataset);
  write_manifest(out, "ablate", config_to_yaml(base), index.fingerprint(),
                 {"<variant>/train", "<variant>/denoised", "<variant>/eval", "comparison.md",
                  "comparison.csv", "metrics.csv", "summary.json", "plots/"});
  std::vector<VariantRow> rows;
  std::vector<MetricsReport> all;
  for (const auto& [name, cfg] : ablation_variants(base)) {
    if (!only.empty() && std::find(only.begin(), only.end(), name) == only.end()) continue;
    VariantRow row;
    row.variant = name;
    try {
      log_info("ablation variant " + name);
      cmd_train(cfg, out / name / "train", true);
      cmd_denoise(out / name / "train" / "model.ckpt", cfg.dataset, out / name / "denoised",
                  {"test", true});
      EvaluateCommandOptions eo;
      eo.model_id = name;
      eo.include_low = all.empty();
      eo.force = true;
      auto reports = cmd_evaluate(out / name / "denoised", cfg.dataset, out / name / "eval", eo);
      std::vector<MetricsReport> mine;
      for (auto& r : reports) {
        if (r.model_id == name) mine.push_back(r);
        all.push_back(std::move(r));
      }
      row.summary = summarize(mine);
    } catch (const std::exception& e) {
      row.status = "FAILED";
      row.diagnostic = e.what();
      log(LogLevel::Error, "variant " + name + " failed: " + e.what());
    }
    rows.push_back(std::move(row));
  }
  write_text(out / "comparison.md", comparison_markdown(rows));
  write_comparison_csv(out / "comparison.csv", rows);
  if (!all.empty()) {
    write_metrics_csv(out / "metrics.csv", all);
    write_text(out / "summary.json", summary_json(all, {{"source_revision", source_revision()}}));
    write_metric_plots(out, all);
  }
  return rows;
}

std::vector<MetricsReport> cmd_report(const std::vector<fs::path>& runs, const fs::path& out, bool force) {
  if (runs.empty()) throw ValidationError("report: no runs given");
  std::vector<MetricsReport> all;
  for (const auto& run : runs) {
    fs::path csv = run;
    if (fs::is_directory(run)) {
      csv = fs::exists(run / "metrics.csv") ? run / "metrics.csv" : run / "eval" / "metrics.csv";
    }
    auto rows = read_metrics_csv(csv);
    all.insert(all.end(), rows.begin(), rows.end());
  }
  prepare_out_dir(out, force);
  write_metrics_csv(out / "metrics.csv", all);
  write_text(out / "summary.json", summary_json(all, {{"source_revision", source_revision()}}));
  const auto rows = rows_by_model(all);
  write_text(out / "comparison.md", comparison_markdown(rows));
  write_comparison_csv(out / "comparison.csv", rows);
  write_metric_plots(out, all);
  return all;
}

// ---------------------------------------------------------------------------

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Cycle-consistent noise-predictor denoising workbench for synthetic low-dose PET"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(CYCLEDCN_VERSION) + " (" + source_revision() + ")");

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  bool force = false;
  std::optional<bool> deterministic;
  std::vector<std::string> sets;
  bool quiet = false;
  app.add_option("--config", config_path, "YAML training config")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "Override the seed");
  app.add_option("--out", out, "Output directory");
  app.add_flag("--force", force, "Overwrite a non-empty output directory");
  app.add_flag("--deterministic{true},--nondeterministic{false}", deterministic,
               "Serial fixed-order gradient accumulation (default from config)");
  app.add_option("--set", sets, "Config override key=value (repeatable)");
  app.add_flag("-q,--quiet", quiet, "Log only warnings and errors");

  GenerateOptions gen;
  std::string shape_text = "64,128,128";
  std::string radius_text = "4,7";
  auto* g = app.add_subcommand("generate", "Generate a synthetic phantom dataset");
  g->fallthrough();
  g->add_option("--cases", gen.cases, "Number of phantom cases")->capture_default_str();
  g->add_option("--fractions", gen.fractions, "Dose fractions, e.g. 1/4 1/10 1/24")->delimiter(',')->capture_default_str();
  g->add_option("--shape", shape_text, "nz,ny,nx")->capture_default_str();
  g->add_option("--counts-per-unit", gen.counts_per_unit, "Full-dose counts per unit activity")->capture_default_str();
  g->add_option("--tumors", gen.tumors, "Tumors per case")->capture_default_str();
  g->add_option("--tumor-contrast", gen.tumor_contrast, "Tumor contrast multiplier")->capture_default_str();
  g->add_option("--tumor-radius", radius_text, "min,max radius in voxels")->capture_default_str();
  g->add_option("--cortex-amplitude", gen.cortex_amplitude)->capture_default_str();
  g->add_option("--smoothness", gen.smoothness, "Anatomy blur sigma (voxels)")->capture_default_str();
  g->add_option("--val", gen.n_val, "Validation cases")->capture_default_str();
  g->add_option("--test", gen.n_test, "Test cases")->capture_default_str();

  std::string dataset_override, resume;
  auto* t = app.add_subcommand("train", "Train a model");
  t->fallthrough();
  t->add_option("--dataset", dataset_override, "Dataset directory (overrides the config)");
  t->add_option("--resume", resume, "Checkpoint to resume from")->check(CLI::ExistingFile);

  std::string checkpoint, input, split = "test";
  auto* d = app.add_subcommand("denoise", "Denoise volumes with a trained checkpoint");
  d->fallthrough();
  d->add_option("--checkpoint", checkpoint, "Checkpoint file")->required()->check(CLI::ExistingFile);
  d->add_option("--input", input, "Volume file, directory of volumes or dataset directory")->required();
  d->add_option("--split", split, "Dataset split to denoise")->capture_default_str();

  std::string denoised_dir, reference;
  EvaluateCommandOptions eval_opts;
  auto* e = app.add_subcommand("evaluate", "Compute metrics against references");
  e->fallthrough();
  e->add_option("--denoised", denoised_dir, "Denoised volume or directory")->required();
  e->add_option("--reference", reference, "Dataset directory or directory of reference volumes")->required();
  e->add_option("--model-id", eval_opts.model_id, "Label for the report rows")->capture_default_str();
  e->add_option("--dose", eval_opts.dose_label, "Dose fraction label of the low-dose inputs");
  e->add_flag("!--no-low", eval_opts.include_low, "Skip low-dose baseline rows");

  std::vector<std::string> variants;
  auto* a = app.add_subcommand("ablate", "Run the full model and the five ablation variants");
  a->fallthrough();
  a->add_option("--dataset", dataset_override, "Dataset directory (overrides the config)");
  a->add_option("--variants", variants, "Subset of variants to run")->delimiter(',');

  std::vector<std::string> runs;
  auto* r = app.add_subcommand("report", "Merge evaluation reports and emit tables and plots");
  r->fallthrough();
  r->add_option("runs", runs, "metrics.csv files or run directories")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? kExitOk : kExitValidation;
  }
  if (quiet) log_level() = LogLevel::Warn;

  const auto resolve_config = [&] {
    TrainConfig c = config_path.empty() ? TrainConfig{} : load_config(config_path);
    for (const auto& kv : sets) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw ValidationError("--set expects key=value, got '" + kv + "'");
      apply_config_override(c, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (seed) c.seed = *seed;
    if (deterministic) c.deterministic = *deterministic;
    if (!dataset_override.empty()) c.dataset = dataset_override;
    c.validate();
    return c;
  };
  const auto require_out = [&](const char* cmd) {
    if (out.empty()) throw ValidationError(std::string(cmd) + ": --out is required");
    return fs::path(out);
  };

  try {
    if (g->parsed()) {
      gen.out = require_out("generate");
      gen.force = force;
      if (seed) gen.seed = *seed;
      const auto shape = CLI::detail::split(shape_text, ',');
      const auto radius = CLI::detail::split(radius_text, ',');
      if (shape.size() != 3 || radius.size() != 2) {
        throw ValidationError("--shape needs nz,ny,nx and --tumor-radius needs min,max");
      }
      gen.shape = {std::stoul(shape[0]), std::stoul(shape[1]), std::stoul(shape[2])};
      gen.tumor_radius_min = std::stod(radius[0]);
      gen.tumor_radius_max = std::stod(radius[1]);
      const DatasetIndex index = cmd_generate(gen);
      std::cout << "dataset " << gen.out.string() << " fingerprint " << index.fingerprint() << '\n';
    } else if (t->parsed()) {
      const TrainConfig c = resolve_config();
      const TrainingState s = cmd_train(c, require_out("train"), force,
                                        resume.empty() ? std::nullopt : std::optional<fs::path>(resume));
      std::cout << "trained " << s.epoch << " epochs; checkpoint " << (fs::path(out) / "model.ckpt").string() << '\n';
    } else if (d->parsed()) {
      const auto files = cmd_denoise(checkpoint, input, require_out("denoise"), {split, force});
      std::cout << "wrote " << files.size() << " denoised volume(s)\n";
    } else if (e->parsed()) {
      eval_opts.force = force;
      const auto reports = cmd_evaluate(denoised_dir, reference, require_out("evaluate"), eval_opts);
      std::cout << summary_json(reports);
    } else if (a->parsed()) {
      const auto rows = cmd_ablate(resolve_config(), require_out("ablate"), force, variants);
      std::cout << comparison_markdown(rows);
      const bool failed = std::any_of(rows.begin(), rows.end(), [](const VariantRow& v) { return v.status != "ok"; });
      return failed ? kExitRuntime : kExitOk;
    } else if (r->parsed()) {
      std::vector<fs::path> paths(runs.begin(), runs.end());
      const auto reports = cmd_report(paths, require_out("report"), force);
      std::cout << comparison_markdown(rows_by_model(reports));
    }
  } catch (const ValidationError& ex) {
    log(LogLevel::Error, ex.what());
    return kExitValidation;
  } catch (const FileFormatError& ex) {
    log(LogLevel::Error, ex.what());
    return kExitValidation;
  } catch (const DivergenceError& ex) {
    log(LogLevel::Error, std::string(ex.what()) + " (term: " + ex.term() + ")");
    return kExitRuntime;
  } catch (const std::invalid_argument& ex) {
    log(LogLevel::Error, std::string("invalid number: ") + ex.what());
    return kExitValidation;
  } catch (const std::exception& ex) {
    log(LogLevel::Error, ex.what());
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace cdn
