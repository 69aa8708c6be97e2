// Copyright 2026 The cycledcn Authors.
// SPDX-License-Identifier: Apache-2.0

#include "cycledcn/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>

#include <json.hpp>

#include "cycledcn/error.hpp"
#include "cycledcn/hashing.hpp"
#include "cycledcn/volume_io.hpp"

namespace cdn {

using nlohmann::json;

SliceContext make_context(const Volume& v, std::size_t z, std::size_t k, const Crop& crop) {
  const Shape3& s = v.shape();
  if (z >= s.nz) throw ValidationError("make_context: slice index out of range");
  const std::size_t h = crop.h == 0 ? s.ny : crop.h;
  const std::size_t w = crop.h == 0 ? s.nx : crop.w;
  if (crop.y0 + h > s.ny || crop.x0 + w > s.nx || w == 0) {
    throw ValidationError("make_context: crop exceeds slice bounds");
  }
  auto copy_plane = [&](std::size_t zz, Tensor& dst, std::size_t c) {
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) dst(c, y, x) = v.at(zz, crop.y0 + y, crop.x0 + x);
    }
  };
  SliceContext ctx;
  ctx.z_index = z;
  ctx.target = Tensor(1, h, w);
  copy_plane(z, ctx.target, 0);
  if (k > 0) {
    ctx.neighbors = Tensor(2 * k, h, w);
    const auto last = static_cast<std::ptrdiff_t>(s.nz) - 1;
    std::size_t c = 0;
    for (std::ptrdiff_t d = -static_cast<std::ptrdiff_t>(k); d <= static_cast<std::ptrdiff_t>(k); ++d) {
      if (d == 0) continue;
      const std::ptrdiff_t zz = std::clamp<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(z) + d, 0, last);
      copy_plane(static_cast<std::size_t>(zz), ctx.neighbors, c++);
    }
  }
  return ctx;
}

std::vector<PairedSample> build_dataset(std::span<const Volume> full, std::span<const Volume> low,
                                        std::size_t neighbor_k) {
  if (full.size() != low.size()) {
    throw ValidationError("build_dataset: " + std::to_string(full.size()) + " full-dose vs " +
                          std::to_string(low.size()) + " low-dose volumes");
  }
  std::vector<PairedSample> out;
  for (std::size_t i = 0; i < full.size(); ++i) {
    require_same_shape(full[i], low[i], ("build_dataset pair " + std::to_string(i)).c_str());
    for (std::size_t z = 0; z < full[i].shape().nz; ++z) {
      PairedSample s{make_context(low[i], z, neighbor_k), make_context(full[i], z, neighbor_k), i};
      s.low.validate();
      s.full.validate();
      out.push_back(std::move(s));
    }
  }
  return out;
}

Split split_cases(std::size_t n, std::size_t n_val, std::size_t n_test, std::uint64_t seed) {
  if (n_val + n_test >= n) {
    throw ValidationError("split: " + std::to_string(n_val) + " validation + " +
                          std::to_string(n_test) + " test cases leave no training cases out of " +
                          std::to_string(n));
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  // Fisher-Yates with explicit draws; std::shuffle is implementation-defined.
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(order[i - 1], order[j]);
  }
  Split s;
  s.test.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
  s.val.assign(order.begin() + static_cast<std::ptrdiff_t>(n_test),
               order.begin() + static_cast<std::ptrdiff_t>(n_test + n_val));
  s.train.assign(order.begin() + static_cast<std::ptrdiff_t>(n_test + n_val), order.end());
  for (auto* v : {&s.train, &s.val, &s.test}) std::sort(v->begin(), v->end());
  return s;
}

// ---------------------------------------------------------------------------

std::vector<std::size_t> DatasetIndex::members(const std::string& split) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    if (cases[i].split == split) out.push_back(i);
  }
  return out;
}

std::string DatasetIndex::fingerprint() const {
  std::string all;
  for (const auto& c : cases) {
    for (const auto& [path, hash] : c.hashes) all += path + ":" + hash + "\n";
  }
  return sha256_hex(all);
}

void save_index(const DatasetIndex& index, const std::filesystem::path& path) {
  json j;
  j["format"] = "cycledcn-dataset-1";
  j["seed"] = index.seed;
  j["counts_per_unit"] = index.counts_per_unit;
  j["dose_labels"] = index.dose_labels;
  j["fingerprint"] = index.fingerprint();
  json cases = json::array();
  for (const auto& c : index.cases) {
    json tumors = json::array();
    for (const auto& t : c.tumors) {
      tumors.push_back({{"center", t.center}, {"radius", t.radius}, {"contrast", t.contrast}});
    }
    cases.push_back({{"id", c.id},
                     {"split", c.split},
                     {"full", c.full},
                     {"low", c.low},
                     {"hashes", c.hashes},
                     {"tumors", tumors}});
  }
  j["cases"] = std::move(cases);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write dataset index " + path.string());
  out << j.dump(2) << '\n';
}

DatasetIndex load_index(const std::filesystem::path& path, bool verify_hashes) {
  const auto file = std::filesystem::is_directory(path) ? path / kIndexFileName : path;
  std::ifstream in(file);
  if (!in) throw ValidationError("dataset index not found: " + file.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ValidationError("dataset index " + file.string() + " is not valid JSON: " + e.what());
  }
  DatasetIndex index;
  index.root = file.parent_path();
  try {
    index.seed = j.at("seed").get<std::uint64_t>();
    index.counts_per_unit = j.at("counts_per_unit").get<double>();
    index.dose_labels = j.at("dose_labels").get<std::vector<std::string>>();
    for (const auto& c : j.at("cases")) {
      CaseRecord r;
      r.id = c.at("id").get<std::string>();
      r.split = c.at("split").get<std::string>();
      r.full = c.at("full").get<std::string>();
      r.low = c.at("low").get<std::map<std::string, std::string>>();
      r.hashes = c.at("hashes").get<std::map<std::string, std::string>>();
      for (const auto& t : c.at("tumors")) {
        r.tumors.push_back({t.at("center").get<std::array<double, 3>>(), t.at("radius").get<double>(),
                            t.at("contrast").get<double>()});
      }
      if (r.split != "train" && r.split != "val" && r.split != "test") {
        throw ValidationError("case " + r.id + " has unknown split '" + r.split + "'");
      }
      index.cases.push_back(std::move(r));
    }
  } catch (const json::exception& e) {
    throw ValidationError("dataset index " + file.string() + " is malformed: " + e.what());
  }
  if (verify_hashes) {
    for (const auto& c : index.cases) {
      for (const auto& [rel, hash] : c.hashes) {
        if (sha256_file(index.root / rel) != hash) {
          throw ValidationError("content hash mismatch for " + rel);
        }
      }
    }
  }
  return index;
}

// ---------------------------------------------------------------------------

namespace {

bool looks_normalized(const Volume& v) {
  return v.meta().count("norm_max") > 0 && v.min_value() >= 0.0f && v.max_value() <= 1.0f;
}

}  // namespace

CasePair normalize_pair(std::string id, const Volume& full, const Volume& low) {
  require_same_shape(full, low, ("pair " + id).c_str());
  if (looks_normalized(full) && looks_normalized(low)) return {std::move(id), full, low, {}};
  full.require_finite_nonnegative("full-dose volume");
  low.require_finite_nonnegative("low-dose volume");
  const IntensityScale scale{full.min_value(), full.max_value()};
  return {std::move(id), apply_scale(full, scale, true), apply_scale(low, scale, true), {}};
}

CasePair load_case(const DatasetIndex& index, std::size_t case_index,
                   const std::string& dose_label) {
  if (case_index >= index.cases.size()) throw ValidationError("case index out of range");
  const CaseRecord& r = index.cases[case_index];
  const auto it = r.low.find(dose_label);
  if (it == r.low.end()) {
    throw ValidationError("case " + r.id + " has no low-dose volume for fraction " + dose_label);
  }
  CasePair pair = normalize_pair(r.id, load_volume(index.root / r.full), load_volume(index.root / it->second));
  pair.tumors = r.tumors;
  return pair;
}

std::vector<CasePair> load_split(const DatasetIndex& index, const std::string& dose_label,
                                 const std::string& split, std::size_t max_cases) {
  std::vector<CasePair> out;
  for (std::size_t i : index.members(split)) {
    if (max_cases > 0 && out.size() >= max_cases) break;
    out.push_back(load_case(index, i, dose_label));
  }
  return out;
}

}  // namespace cdn
