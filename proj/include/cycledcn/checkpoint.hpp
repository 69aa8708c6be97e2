// Copyright 2026 The cycledcn Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>

#include "cycledcn/trainer.hpp"

namespace cdn {

/// Checkpoint layout:
///   "CDN-CKPT-1\n" magic, u64 little-endian header length, JSON header
///   (config, epoch, weights, loss log, array table), then the arrays listed
///   in the header as little-endian float64.
inline constexpr char kCheckpointMagic[] = "CDN-CKPT-1\n";

/// Written to a temporary file and renamed into place.
void save_checkpoint(const TrainingState& state, const std::filesystem::path& path);
TrainingState load_checkpoint(const std::filesystem::path& path);

}  // namespace cdn
