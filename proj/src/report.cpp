// Copyright 2026 The cycledcn Authors.
// SPDX-License-Identifier: Apache-2.0

#include "cycledcn/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cycledcn/error.hpp"

namespace cdn {
namespace {

using nlohmann::json;

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

double parse_num(const std::string& s) {
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  try {
    return std::stod(s);
  } catch (const std::exception&) {
    throw ValidationError("metrics CSV: cannot parse number '" + s + "'");
  }
}

const char* kMetricsHeader =
    "case_id,model_id,dose_fraction,psnr,ssim,nrmse,epi,cnr,hausdorff,hausdorff_slice";

json stat_json(const Stat& s) {
  auto j_num = [](double v) { return std::isfinite(v) ? json(v) : json(num(v)); };
  return {{"mean", j_num(s.mean)}, {"std", j_num(s.std)}, {"count", s.count}};
}

std::string pm(const Stat& s, int digits) {
  if (s.count == 0) return "-";
  char buf[64];
  if (!std::isfinite(s.mean)) return num(s.mean);
  std::snprintf(buf, sizeof buf, "%.*f ± %.*f", digits, s.mean, digits, std::isfinite(s.std) ? s.std : 0.0);
  return buf;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

void write_metrics_csv(const std::filesystem::path& path, const std::vector<MetricsReport>& reports) {
  std::ostringstream out;
  out << kMetricsHeader << '\n';
  for (const auto& r : reports) {
    out << csv_field(r.case_id) << ',' << csv_field(r.model_id) << ',' << csv_field(r.dose_fraction)
        << ',' << num(r.psnr) << ',' << num(r.ssim) << ',' << num(r.nrmse) << ',' << num(r.epi) << ','
        << (r.cnr ? num(*r.cnr) : "") << ',' << (r.hausdorff ? num(*r.hausdorff) : "") << ','
        << r.hausdorff_slice << '\n';
  }
  write_text(path, out.str());
}

std::vector<MetricsReport> read_metrics_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read metrics CSV " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kMetricsHeader) {
    throw ValidationError(path.string() + " is not a metrics CSV");
  }
  std::vector<MetricsReport> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 10) throw ValidationError("metrics CSV row has " + std::to_string(f.size()) + " fields");
    MetricsReport r;
    r.case_id = f[0];
    r.model_id = f[1];
    r.dose_fraction = f[2];
    r.psnr = parse_num(f[3]);
    r.ssim = parse_num(f[4]);
    r.nrmse = parse_num(f[5]);
    r.epi = parse_num(f[6]);
    if (!f[7].empty()) r.cnr = parse_num(f[7]);
    if (!f[8].empty()) r.hausdorff = parse_num(f[8]);
    r.hausdorff_slice = static_cast<std::size_t>(parse_num(f[9]));
    out.push_back(std::move(r));
  }
  return out;
}

std::string summary_json(const std::vector<MetricsReport>& reports,
                         const std::map<std::string, std::string>& extra) {
  std::map<std::string, std::vector<MetricsReport>> by_model;
  for (const auto& r : reports) by_model[r.model_id].push_back(r);
  json j;
  json models = json::object();
  for (const auto& [model, rows] : by_model) {
    const ReportSummary s = summarize(rows);
    models[model] = {{"cases", rows.size()},         {"psnr", stat_json(s.psnr)},
                     {"ssim", stat_json(s.ssim)},    {"nrmse", stat_json(s.nrmse)},
                     {"epi", stat_json(s.epi)},      {"cnr", stat_json(s.cnr)},
                     {"hausdorff", stat_json(s.hausdorff)}};
  }
  j["models"] = std::move(models);
  for (const auto& [k, v] : extra) j[k] = v;
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------

std::string loss_log_header() {
  return "epoch,gan,cyc,identity,sup,ssim_planes,disc_O,disc_U,lambda_G,lambda_C,lambda_I,lambda_P,"
         "lambda_S";
}

std::string loss_log_row(const EpochRecord& r) {
  std::ostringstream out;
  const auto& l = r.losses;
  out << r.epoch << ',' << num(l.gan) << ',' << num(l.cyc) << ',' << num(l.identity) << ','
      << num(l.sup) << ',' << num(l.ssim_planes) << ',' << num(l.disc_O) << ',' << num(l.disc_U);
  for (LossTerm t : kAllLossTerms) out << ',' << num(r.weights[t]);
  return out.str();
}

void append_loss_log(const std::filesystem::path& path, const EpochRecord& record) {
  const bool fresh = !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::app);
  if (!out) throw std::runtime_error("cannot append to " + path.string());
  if (fresh) out << loss_log_header() << '\n';
  out << loss_log_row(record) << '\n';
}

std::string validation_log_header() { return "epoch,val_psnr,val_ssim"; }

std::string validation_log_row(const EpochRecord& r) {
  return std::to_string(r.epoch) + "," + num(r.val_psnr) + "," + num(r.val_ssim);
}

// ---------------------------------------------------------------------------

std::string comparison_markdown(const std::vector<VariantRow>& rows) {
  std::ostringstream out;
  out << "| variant | status | PSNR (dB) | SSIM | NRMSE | EPI | CNR | Hausdorff |\n";
  out << "|---|---|---|---|---|---|---|---|\n";
  for (const auto& r : rows) {
    out << "| " << r.variant << " | " << r.status;
    if (r.status != "ok") {
      out << " | - | - | - | - | - | - |\n";
      continue;
    }
    const auto& s = r.summary;
    out << " | " << pm(s.psnr, 3) << " | " << pm(s.ssim, 4) << " | " << pm(s.nrmse, 4) << " | "
        << pm(s.epi, 4) << " | " << pm(s.cnr, 3) << " | " << pm(s.hausdorff, 3) << " |\n";
  }
  return out.str();
}

void write_comparison_csv(const std::filesystem::path& path, const std::vector<VariantRow>& rows) {
  std::ostringstream out;
  out << "variant,status,psnr_mean,psnr_std,ssim_mean,ssim_std,nrmse_mean,nrmse_std,epi_mean,epi_std,"
         "cnr_mean,cnr_std,hausdorff_mean,hausdorff_std,diagnostic\n";
  for (const auto& r : rows) {
    out << csv_field(r.variant) << ',' << r.status;
    for (const Stat* s : {&r.summary.psnr, &r.summary.ssim, &r.summary.nrmse, &r.summary.epi,
                          &r.summary.cnr, &r.summary.hausdorff}) {
      if (r.status == "ok" && s->count > 0) {
        out << ',' << num(s->mean) << ',' << num(s->std);
      } else {
        out << ",,";
      }
    }
    out << ',' << csv_field(r.diagnostic) << '\n';
  }
  write_text(path, out.str());
}

// ---------------------------------------------------------------------------

std::string bar_chart_svg(const std::string& title, const std::vector<BarSeries>& bars) {
  const double width = 120.0 + 90.0 * static_cast<double>(std::max<std::size_t>(bars.size(), 1));
  const double height = 320.0, top = 40.0, bottom = 260.0, left = 60.0;
  double hi = 0.0, lo = 0.0;
  for (const auto& b : bars) {
    if (!std::isfinite(b.mean)) continue;
    hi = std::max(hi, b.mean + (std::isfinite(b.std) ? b.std : 0.0));
    lo = std::min(lo, b.mean - (std::isfinite(b.std) ? b.std : 0.0));
  }
  if (hi == lo) hi = lo + 1.0;
  const auto ypos = [&](double v) { return bottom - (v - lo) / (hi - lo) * (bottom - top); };
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
    << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<text x=\"" << width / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">"
    << xml_escape(title) << "</text>\n";
  s << "<line x1=\"" << left << "\" y1=\"" << ypos(0.0) << "\" x2=\"" << width - 20 << "\" y2=\""
    << ypos(0.0) << "\" stroke=\"black\"/>\n";
  s << "<text x=\"" << left - 6 << "\" y=\"" << top + 4 << "\" text-anchor=\"end\">" << num(hi) << "</text>\n";
  s << "<text x=\"" << left - 6 << "\" y=\"" << bottom + 4 << "\" text-anchor=\"end\">" << num(lo) << "</text>\n";
  for (std::size_t i = 0; i < bars.size(); ++i) {
    const auto& b = bars[i];
    const double x = left + 20.0 + 90.0 * static_cast<double>(i);
    if (std::isfinite(b.mean)) {
      const double y0 = ypos(std::max(0.0, b.mean)), y1 = ypos(std::min(0.0, b.mean));
      s << "<rect x=\"" << x << "\" y=\"" << y0 << "\" width=\"60\" height=\"" << y1 - y0
        << "\" fill=\"#4a78b0\"/>\n";
      if (std::isfinite(b.std) && b.std > 0.0) {
        s << "<line x1=\"" << x + 30 << "\" y1=\"" << ypos(b.mean - b.std) << "\" x2=\"" << x + 30
          << "\" y2=\"" << ypos(b.mean + b.std) << "\" stroke=\"black\"/>\n";
      }
      s << "<text x=\"" << x + 30 << "\" y=\"" << y0 - 4 << "\" text-anchor=\"middle\">" << num(b.mean)
        << "</text>\n";
    }
    s << "<text x=\"" << x + 30 << "\" y=\"" << bottom + 18 << "\" text-anchor=\"middle\">"
      << xml_escape(b.label) << "</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

std::string line_profile_svg(const std::string& title,
                             const std::vector<std::pair<std::string, std::vector<double>>>& series) {
  static constexpr const char* kColors[] = {"#1b1b1b", "#c0392b", "#2e86c1", "#27ae60", "#8e44ad"};
  const double width = 640.0, height = 360.0, left = 50.0, right = 620.0, top = 40.0, bottom = 300.0;
  double lo = 0.0, hi = 0.0;
  std::size_t n = 0;
  bool first = true;
  for (const auto& [name, v] : series) {
    n = std::max(n, v.size());
    for (double x : v) {
      if (!std::isfinite(x)) continue;
      lo = first ? x : std::min(lo, x);
      hi = first ? x : std::max(hi, x);
      first = false;
    }
  }
  if (hi == lo) hi = lo + 1.0;
  const auto px = [&](std::size_t i) {
    return left + (n > 1 ? static_cast<double>(i) / static_cast<double>(n - 1) : 0.0) * (right - left);
  };
  const auto py = [&](double v) { return bottom - (v - lo) / (hi - lo) * (bottom - top); };
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
    << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<text x=\"" << width / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">"
    << xml_escape(title) << "</text>\n";
  s << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << right - left << "\" height=\""
    << bottom - top << "\" fill=\"none\" stroke=\"#888\"/>\n";
  s << "<text x=\"" << left - 4 << "\" y=\"" << top + 4 << "\" text-anchor=\"end\">" << num(hi) << "</text>\n";
  s << "<text x=\"" << left - 4 << "\" y=\"" << bottom << "\" text-anchor=\"end\">" << num(lo) << "</text>\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& [name, v] = series[k];
    const char* color = kColors[k % std::size(kColors)];
    s << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (std::isfinite(v[i])) s << px(i) << ',' << py(v[i]) << ' ';
    }
    s << "\"/>\n";
    s << "<text x=\"" << right - 100 << "\" y=\"" << top + 14 + 14 * static_cast<double>(k)
      << "\" fill=\"" << color << "\">" << xml_escape(name) << "</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

}  // namespace cdn
