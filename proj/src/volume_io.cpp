// Copyright 2026 The cycledcn Authors.
// SPDX-License-Identifier: Apache-2.0

#include "cycledcn/volume_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>

#include <json.hpp>

#include "cycledcn/error.hpp"

namespace cdn {
namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <typename T>
void put_le(std::string& out, T value) {
  auto bits = std::bit_cast<std::array<char, sizeof(T)>>(value);
  if constexpr (std::endian::native == std::endian::big) std::reverse(bits.begin(), bits.end());
  out.append(bits.data(), bits.size());
}

template <typename T>
T get_le(const char* p) {
  std::array<char, sizeof(T)> bits;
  std::memcpy(bits.data(), p, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bits.begin(), bits.end());
  return std::bit_cast<T>(bits);
}

constexpr std::size_t kHeaderBytes = 8 + 3 * 4 + 3 * 8 + 4;

}  // namespace

void save_volume(const Volume& v, const std::filesystem::path& path) {
  nlohmann::json meta = nlohmann::json::object();
  for (const auto& [k, val] : v.meta()) meta[k] = val;
  const std::string meta_text = meta.dump(-1, ' ', false);

  std::string buf;
  buf.reserve(kHeaderBytes + meta_text.size() + v.size() * 4);
  buf.append(kVolumeMagic, sizeof(kVolumeMagic));
  put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(v.shape().nz));
  put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(v.shape().ny));
  put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(v.shape().nx));
  put_le<double>(buf, v.spacing().dz);
  put_le<double>(buf, v.spacing().dy);
  put_le<double>(buf, v.spacing().dx);
  put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(meta_text.size()));
  buf += meta_text;
  for (float f : v.data()) put_le<float>(buf, f);

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FileFormatError("cannot open " + path.string() + " for writing");
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw FileFormatError("write failed for " + path.string());
}

Volume load_volume(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileFormatError("cannot open " + path.string());
  const std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  if (buf.size() < sizeof(kVolumeMagic) ||
      std::memcmp(buf.data(), kVolumeMagic, sizeof(kVolumeMagic)) != 0) {
    throw BadMagicError(path.string() + ": not a CDNVOL1 file (magic mismatch)");
  }
  if (buf.size() < kHeaderBytes) {
    throw SizeMismatchError(path.string() + ": truncated header");
  }
  const char* p = buf.data() + 8;
  Shape3 shape{get_le<std::uint32_t>(p), get_le<std::uint32_t>(p + 4), get_le<std::uint32_t>(p + 8)};
  Spacing3 spacing{get_le<double>(p + 12), get_le<double>(p + 20), get_le<double>(p + 28)};
  const std::uint32_t meta_len = get_le<std::uint32_t>(p + 36);

  const std::size_t payload = shape.count() * 4;
  if (buf.size() != kHeaderBytes + meta_len + payload) {
    throw SizeMismatchError(path.string() + ": file holds " + std::to_string(buf.size()) +
                            " bytes, header implies " +
                            std::to_string(kHeaderBytes + meta_len + payload));
  }

  Volume v(shape, spacing);
  const auto meta = nlohmann::json::parse(buf.begin() + kHeaderBytes,
                                          buf.begin() + kHeaderBytes + meta_len, nullptr, false);
  if (meta.is_discarded() || !meta.is_object()) {
    throw FileFormatError(path.string() + ": metadata is not a JSON object");
  }
  for (const auto& [k, val] : meta.items()) {
    v.meta()[k] = val.is_string() ? val.get<std::string>() : val.dump();
  }

  const char* data = buf.data() + kHeaderBytes + meta_len;
  auto dst = v.data();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    const float f = get_le<float>(data + 4 * i);
    if (!std::isfinite(f)) {
      throw NonFinitePayloadError(path.string() + ": non-finite voxel at index " + std::to_string(i));
    }
    dst[i] = f;
  }
  return v;
}

std::vector<std::filesystem::path> list_volumes(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> out;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == kVolumeExtension) {
      out.push_back(entry.path());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace cdn
