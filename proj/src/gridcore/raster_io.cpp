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

#include "infer/gridcore/raster_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace infer::grid {

namespace le {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) {
    out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFFU));
  }
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) {
    out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFFU));
  }
}

void put_f32(std::vector<std::uint8_t>& out, float v) { put_u32(out, std::bit_cast<std::uint32_t>(v)); }

std::uint32_t get_u32(std::span<const std::uint8_t> in, std::size_t offset) {
  if (offset + 4 > in.size()) {
    throw RasterFormatError("read past end of buffer");
  }
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= static_cast<std::uint32_t>(in[offset + static_cast<std::size_t>(i)]) << (8 * i);
  }
  return v;
}

std::uint64_t get_u64(std::span<const std::uint8_t> in, std::size_t offset) {
  if (offset + 8 > in.size()) {
    throw RasterFormatError("read past end of buffer");
  }
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) {
    v |= static_cast<std::uint64_t>(in[offset + static_cast<std::size_t>(i)]) << (8 * i);
  }
  return v;
}

float get_f32(std::span<const std::uint8_t> in, std::size_t offset) {
  return std::bit_cast<float>(get_u32(in, offset));
}

}  // namespace le

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (const std::uint8_t b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::vector<std::uint8_t> encode_raster(std::span<const SemanticGrid> channels) {
  if (channels.empty()) {
    throw std::invalid_argument("encode_raster: no channels");
  }
  const GridSpec spec = channels.front().spec();
  std::vector<std::uint8_t> out{'B', 'E', 'V', 'G'};
  out.reserve(kRasterHeaderBytes + channels.size() * spec.cell_count() * 4);
  le::put_u32(out, static_cast<std::uint32_t>(spec.side()));
  le::put_f32(out, static_cast<float>(spec.resolution()));
  le::put_u32(out, static_cast<std::uint32_t>(channels.size()));
  for (const auto& ch : channels) {
    if (ch.spec() != spec) {
      throw std::invalid_argument("encode_raster: channels disagree on grid spec");
    }
    for (const float v : ch.values()) {
      le::put_f32(out, v);
    }
  }
  return out;
}

std::vector<SemanticGrid> decode_raster(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kRasterHeaderBytes) {
    throw RasterFormatError("raster shorter than its 16-byte header");
  }
  if (std::memcmp(bytes.data(), "BEVG", 4) != 0) {
    throw RasterFormatError("raster magic is not BEVG");
  }
  const std::uint32_t side = le::get_u32(bytes, 4);
  const float resolution = le::get_f32(bytes, 8);
  const std::uint32_t count = le::get_u32(bytes, 12);
  const GridSpec spec{side, static_cast<double>(resolution)};
  const std::size_t expected = kRasterHeaderBytes + static_cast<std::size_t>(count) * spec.cell_count() * 4;
  if (bytes.size() != expected) {
    throw RasterFormatError("raster holds " + std::to_string(bytes.size()) + " bytes, header implies " +
                            std::to_string(expected));
  }
  std::vector<SemanticGrid> out;
  out.reserve(count);
  std::size_t offset = kRasterHeaderBytes;
  for (std::uint32_t c = 0; c < count; ++c) {
    std::vector<float> values(spec.cell_count());
    for (auto& v : values) {
      v = le::get_f32(bytes, offset);
      offset += 4;
    }
    out.emplace_back(spec, std::move(values));
  }
  return out;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open " + path.string());
  }
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw std::runtime_error("cannot write " + path.string());
  }
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) {
    throw std::runtime_error("short write to " + path.string());
  }
}

void write_raster(const std::filesystem::path& path, std::span<const SemanticGrid> channels) {
  write_file_bytes(path, encode_raster(channels));
}

std::vector<SemanticGrid> read_raster(const std::filesystem::path& path) { return decode_raster(read_file_bytes(path)); }

}  // namespace infer::grid
