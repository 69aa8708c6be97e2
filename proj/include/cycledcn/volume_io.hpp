// Copyright 2026 The cycledcn Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "cycledcn/volume.hpp"

namespace cdn {

/// CDNVOL1 layout (little-endian):
///   8 bytes  magic "CDNVOL1\0"
///   3 x u32  shape (nz, ny, nx)
///   3 x f64  spacing (dz, dy, dx)
///   u32      metadata byte length, followed by a UTF-8 JSON object
///   nz*ny*nx float32 voxels, z-major
inline constexpr char kVolumeMagic[8] = {'C', 'D', 'N', 'V', 'O', 'L', '1', '\0'};
inline constexpr const char* kVolumeExtension = ".cdnvol";

void save_volume(const Volume& v, const std::filesystem::path& path);

/// Throws BadMagicError, SizeMismatchError or NonFinitePayloadError on malformed files.
Volume load_volume(const std::filesystem::path& path);

/// All CDNVOL1 files in a directory, sorted by file name.
std::vector<std::filesystem::path> list_volumes(const std::filesystem::path& dir);

}  // namespace cdn
