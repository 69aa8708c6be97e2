// Copyright 2026 The cycledcn Authors.
// SPDX-License-Identifier: Apache-2.0

#include "cycledcn/checkpoint.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "cycledcn/error.hpp"

namespace cdn {
namespace {

using nlohmann::json;

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes little-endian");

constexpr std::size_t kMagicBytes = sizeof(kCheckpointMagic) - 1;

json real_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double real_from(const json& j, double fallback) { return j.is_null() ? fallback : j.get<double>(); }

json breakdown_json(const LossBreakdown& b) {
  return {{"gan", b.gan}, {"cyc", b.cyc}, {"identity", b.identity}, {"sup", b.sup},
          {"ssim_planes", b.ssim_planes}, {"disc_O", b.disc_O}, {"disc_U", b.disc_U}};
}

LossBreakdown breakdown_from(const json& j) {
  LossBreakdown b;
  b.gan = j.at("gan").get<double>();
  b.cyc = j.at("cyc").get<double>();
  b.identity = j.at("identity").get<double>();
  b.sup = j.at("sup").get<double>();
  b.ssim_planes = j.at("ssim_planes").get<double>();
  b.disc_O = j.at("disc_O").get<double>();
  b.disc_U = j.at("disc_U").get<double>();
  return b;
}

json weights_json(const LossWeights& w) {
  return {{"lambda", w.lambda}, {"epsilon", w.epsilon}, {"active", w.active.names()}};
}

LossWeights weights_from(const json& j) {
  LossWeights w;
  w.lambda = j.at("lambda").get<std::array<double, kLossTermCount>>();
  w.epsilon = j.at("epsilon").get<double>();
  for (const auto& n : j.at("active")) w.active.insert(parse_loss_term(n.get<std::string>()));
  return w;
}

/// Calls f(name, span) for every stored array, in file order.
template <typename State, typename F>
void for_each_array(State& s, F&& f) {
  auto& m = s.model;
  f("predictor", m.predictor.params().values());
  f("consistency", m.consistency.params().values());
  f("d_low", m.d_low.params().values());
  f("d_full", m.d_full.params().values());
  f("adam_predictor_m", std::span(s.opt_predictor.m));
  f("adam_predictor_v", std::span(s.opt_predictor.v));
  f("adam_consistency_m", std::span(s.opt_consistency.m));
  f("adam_consistency_v", std::span(s.opt_consistency.v));
  f("adam_d_low_m", std::span(s.opt_d_low.m));
  f("adam_d_low_v", std::span(s.opt_d_low.v));
  f("adam_d_full_m", std::span(s.opt_d_full.m));
  f("adam_d_full_v", std::span(s.opt_d_full.v));
}

}  // namespace

void save_checkpoint(const TrainingState& state, const std::filesystem::path& path) {
  json h;
  h["format"] = "CDN-CKPT-1";
  h["epoch"] = state.epoch;
  h["config"] = config_to_yaml(state.config);
  h["weights"] = weights_json(state.weights);
  h["best_val_psnr"] = real_or_null(state.best_val_psnr);
  h["best_epoch"] = state.best_epoch;
  h["adam_steps"] = {state.opt_predictor.step, state.opt_consistency.step, state.opt_d_low.step,
                     state.opt_d_full.step};
  json log = json::array();
  for (const auto& r : state.log) {
    log.push_back({{"epoch", r.epoch},
                   {"losses", breakdown_json(r.losses)},
                   {"weights", weights_json(r.weights)},
                   {"val_psnr", real_or_null(r.val_psnr)},
                   {"val_ssim", real_or_null(r.val_ssim)}});
  }
  h["log"] = std::move(log);
  json table = json::array();
  for_each_array(state, [&](const char* name, auto values) {
    table.push_back({{"name", name}, {"count", values.size()}});
  });
  h["arrays"] = std::move(table);
  const std::string header = h.dump();

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write checkpoint " + tmp.string());
    out.write(kCheckpointMagic, kMagicBytes);
    const std::uint64_t len = header.size();
    out.write(reinterpret_cast<const char*>(&len), sizeof len);
    out.write(header.data(), static_cast<std::streamsize>(header.size()));
    for_each_array(state, [&](const char*, auto values) {
      out.write(reinterpret_cast<const char*>(values.data()),
                static_cast<std::streamsize>(values.size_bytes()));
    });
    out.flush();
    if (!out) throw std::runtime_error("failed writing checkpoint " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

namespace {

TrainingState read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileFormatError("cannot open checkpoint " + path.string());
  std::vector<char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (buf.size() < kMagicBytes + 8 || std::memcmp(buf.data(), kCheckpointMagic, kMagicBytes) != 0) {
    throw BadMagicError(path.string() + " is not a CDN-CKPT-1 checkpoint");
  }
  std::uint64_t len = 0;
  std::memcpy(&len, buf.data() + kMagicBytes, sizeof len);
  const std::size_t body = kMagicBytes + 8;
  if (len > buf.size() - body) throw SizeMismatchError("checkpoint header is truncated");
  json h;
  try {
    h = json::parse(buf.begin() + static_cast<std::ptrdiff_t>(body),
                    buf.begin() + static_cast<std::ptrdiff_t>(body + len));
  } catch (const json::exception& e) {
    throw FileFormatError(std::string("checkpoint header is not valid JSON: ") + e.what());
  }

  TrainingState s = TrainingState::create(config_from_yaml(h.at("config").get<std::string>()));
  s.epoch = h.at("epoch").get<std::size_t>();
  s.weights = weights_from(h.at("weights"));
  s.best_val_psnr = real_from(h.at("best_val_psnr"), -std::numeric_limits<double>::infinity());
  s.best_epoch = h.at("best_epoch").get<std::size_t>();
  const auto steps = h.at("adam_steps").get<std::array<std::uint64_t, 4>>();
  s.opt_predictor.step = steps[0];
  s.opt_consistency.step = steps[1];
  s.opt_d_low.step = steps[2];
  s.opt_d_full.step = steps[3];
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const auto& r : h.at("log")) {
    s.log.push_back({r.at("epoch").get<std::size_t>(), breakdown_from(r.at("losses")),
                     weights_from(r.at("weights")), real_from(r.at("val_psnr"), nan),
                     real_from(r.at("val_ssim"), nan)});
  }

  const auto& table = h.at("arrays");
  std::size_t offset = body + len;
  std::size_t i = 0;
  for_each_array(s, [&](const char* name, std::span<double> values) {
    if (i >= table.size()) throw SizeMismatchError("checkpoint array table is too short");
    const auto& entry = table[i++];
    const auto count = entry.at("count").get<std::size_t>();
    if (entry.at("name").get<std::string>() != name || count != values.size()) {
      throw SizeMismatchError("checkpoint array '" + entry.at("name").get<std::string>() +
                              "' does not match the configured model");
    }
    if (buf.size() - offset < values.size_bytes()) throw SizeMismatchError("checkpoint payload is truncated");
    std::memcpy(values.data(), buf.data() + offset, values.size_bytes());
    for (double v : values) {
      if (!std::isfinite(v)) {
        throw NonFinitePayloadError("checkpoint array '" + std::string(name) + "' holds non-finite values");
      }
    }
    offset += values.size_bytes();
  });
  if (i != table.size()) throw SizeMismatchError("checkpoint array table is too long");
  if (offset != buf.size()) throw SizeMismatchError("checkpoint has trailing bytes");
  return s;
}

}  // namespace

TrainingState load_checkpoint(const std::filesystem::path& path) {
  try {
    return read_checkpoint(path);
  } catch (const nlohmann::json::exception& e) {
    throw FileFormatError("checkpoint " + path.string() + " has a malformed header: " + e.what());
  }
}

}  // namespace cdn
