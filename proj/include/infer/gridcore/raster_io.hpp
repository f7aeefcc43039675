// Copyright 2026 The infer-bev Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef INFER_GRIDCORE_RASTER_IO_HPP
#define INFER_GRIDCORE_RASTER_IO_HPP

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "infer/gridcore/grid.hpp"

/**
 * \file
 * \brief Grid raster file ("BEVG").
 *
 * Layout, all little-endian:
 *
 *     offset  0  char[4]  magic "BEVG"
 *     offset  4  u32      side
 *     offset  8  f32      resolution (m)
 *     offset 12  u32      channel count
 *     offset 16  f32[]    channel 0 row-major, then channel 1, ...
 */

namespace infer::grid {

inline constexpr std::size_t kRasterHeaderBytes = 16;

class RasterFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Serializes channels that share one spec into a byte buffer.
[[nodiscard]] std::vector<std::uint8_t> encode_raster(std::span<const SemanticGrid> channels);

/// Parses a buffer produced by encode_raster(). Throws RasterFormatError on bad magic or size.
[[nodiscard]] std::vector<SemanticGrid> decode_raster(std::span<const std::uint8_t> bytes);

void write_raster(const std::filesystem::path& path, std::span<const SemanticGrid> channels);
[[nodiscard]] std::vector<SemanticGrid> read_raster(const std::filesystem::path& path);

/// Little-endian helpers shared by the binary formats of this project.
namespace le {
void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v);
void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v);
void put_f32(std::vector<std::uint8_t>& out, float v);
[[nodiscard]] std::uint32_t get_u32(std::span<const std::uint8_t> in, std::size_t offset);
[[nodiscard]] std::uint64_t get_u64(std::span<const std::uint8_t> in, std::size_t offset);
[[nodiscard]] float get_f32(std::span<const std::uint8_t> in, std::size_t offset);
}  // namespace le

/// 64-bit FNV-1a.
[[nodiscard]] std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);

[[nodiscard]] std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace infer::grid

#endif
