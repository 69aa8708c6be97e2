// Copyright 2026 The cycledcn Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "cycledcn/nets.hpp"
#include "cycledcn/phantom.hpp"
#include "cycledcn/volume.hpp"

namespace cdn {

/// In-plane crop; h == 0 selects the whole slice.
struct Crop {
  std::size_t y0 = 0, x0 = 0, h = 0, w = 0;
};

/// Axial slice z of v with 2k replicated-edge neighbours, optionally cropped.
SliceContext make_context(const Volume& v, std::size_t z, std::size_t k, const Crop& crop = {});

/// One training example: the same axial position in the low- and full-dose volume.
struct PairedSample {
  SliceContext low;
  SliceContext full;
  std::size_t case_index = 0;
};

/// One sample per axial slice of every pair, ordered by (case, z).
std::vector<PairedSample> build_dataset(std::span<const Volume> full, std::span<const Volume> low,
                                        std::size_t neighbor_k);

struct Split {
  std::vector<std::size_t> train, val, test;
};

/// Seeded shuffle of 0..n-1 into test, validation and training membership.
Split split_cases(std::size_t n, std::size_t n_val, std::size_t n_test, std::uint64_t seed);

struct CaseRecord {
  std::string id;
  std::string split;  // train, val or test
  std::string full;   // path relative to the index directory
  std::map<std::string, std::string> low;     // dose label -> relative path
  std::map<std::string, std::string> hashes;  // relative path -> sha256
  std::vector<Tumor> tumors;
};

/// Contents of index.json for a generated dataset.
struct DatasetIndex {
  std::filesystem::path root;
  std::uint64_t seed = 0;
  double counts_per_unit = 50.0;
  std::vector<std::string> dose_labels;
  std::vector<CaseRecord> cases;

  std::vector<std::size_t> members(const std::string& split) const;
  /// SHA-256 over the per-file content hashes in index order.
  std::string fingerprint() const;
};

inline constexpr const char* kIndexFileName = "index.json";

void save_index(const DatasetIndex& index, const std::filesystem::path& path);
/// Accepts index.json or its directory. With verify_hashes, every file is
/// re-hashed and a mismatch throws ValidationError.
DatasetIndex load_index(const std::filesystem::path& path, bool verify_hashes = false);

/// A normalised low/full pair sharing the full-dose intensity scale.
struct CasePair {
  std::string id;
  Volume full;
  Volume low;
  std::vector<Tumor> tumors;
};

/// Puts a raw pair on the full-dose scale (low clamped into [0, 1]).
CasePair normalize_pair(std::string id, const Volume& full, const Volume& low);

CasePair load_case(const DatasetIndex& index, std::size_t case_index, const std::string& dose_label);
std::vector<CasePair> load_split(const DatasetIndex& index, const std::string& dose_label,
                                 const std::string& split, std::size_t max_cases = 0);

}  // namespace cdn
