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

#include "infer/autodiff/checkpoint.hpp"

#include <cstring>
#include <sstream>

#include "infer/gridcore/raster_io.hpp"

namespace infer::ad {

namespace le = grid::le;

std::string hex64(std::uint64_t v) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[static_cast<std::size_t>(i)] = kDigits[v & 0xFU];
    v >>= 4;
  }
  return s;
}

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt) {
  std::vector<std::uint8_t> out{'I', 'F', 'C', 'K'};
  le::put_u32(out, kCheckpointVersion);
  std::string meta;
  for (const auto& [k, v] : ckpt.metadata) {
    if (k.find_first_of("=\n") != std::string::npos || v.find('\n') != std::string::npos) {
      throw CheckpointError("checkpoint metadata entry '" + k + "' contains a separator");
    }
    meta += k + "=" + v + "\n";
  }
  le::put_u32(out, static_cast<std::uint32_t>(meta.size()));
  out.insert(out.end(), meta.begin(), meta.end());
  le::put_u32(out, static_cast<std::uint32_t>(ckpt.parameters.size()));
  for (const auto& p : ckpt.parameters) {
    if (numel(p.shape) != p.data.size()) {
      throw CheckpointError("parameter '" + p.name + "' data does not match shape " + shape_string(p.shape));
    }
    le::put_u32(out, static_cast<std::uint32_t>(p.name.size()));
    out.insert(out.end(), p.name.begin(), p.name.end());
    le::put_u32(out, static_cast<std::uint32_t>(p.shape.size()));
    for (const auto d : p.shape) {
      le::put_u32(out, static_cast<std::uint32_t>(d));
    }
    for (const float v : p.data) {
      le::put_f32(out, v);
    }
  }
  le::put_u64(out, grid::fnv1a64(out));
  return out;
}

namespace {

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) {
      throw CheckpointError("checkpoint truncated at byte " + std::to_string(pos_));
    }
  }
  std::uint32_t u32() {
    need(4);
    const auto v = le::get_u32(bytes_, pos_);
    pos_ += 4;
    return v;
  }
  float f32() {
    need(4);
    const auto v = le::get_f32(bytes_, pos_);
    pos_ += 4;
    return v;
  }
  std::string str(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  [[nodiscard]] std::size_t pos() const { return pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8 + 8 || std::memcmp(bytes.data(), "IFCK", 4) != 0) {
    throw CheckpointError("not a checkpoint file (bad magic or too short)");
  }
  const std::uint32_t version = le::get_u32(bytes, 4);
  if (version != kCheckpointVersion) {
    throw CheckpointError("checkpoint version " + std::to_string(version) + " unsupported (expected " +
                          std::to_string(kCheckpointVersion) + ")");
  }
  const auto body = bytes.first(bytes.size() - 8);
  const std::uint64_t stored = le::get_u64(bytes, bytes.size() - 8);
  if (grid::fnv1a64(body) != stored) {
    throw CheckpointError("checkpoint checksum mismatch");
  }

  Reader r(body);
  r.str(8);
  Checkpoint ckpt;
  std::istringstream meta(r.str(r.u32()));
  for (std::string line; std::getline(meta, line);) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw CheckpointError("malformed checkpoint metadata line '" + line + "'");
    }
    ckpt.metadata[line.substr(0, eq)] = line.substr(eq + 1);
  }
  const std::uint32_t count = r.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    StoredParameter p;
    p.name = r.str(r.u32());
    const std::uint32_t rank = r.u32();
    for (std::uint32_t d = 0; d < rank; ++d) {
      p.shape.push_back(r.u32());
    }
    const std::size_t n = numel(p.shape);
    r.need(n * 4);
    p.data.resize(n);
    for (auto& v : p.data) {
      v = r.f32();
    }
    ckpt.parameters.push_back(std::move(p));
  }
  if (r.pos() != body.size()) {
    throw CheckpointError("checkpoint has trailing bytes");
  }
  return ckpt;
}

std::uint64_t write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const auto bytes = encode_checkpoint(ckpt);
  grid::write_file_bytes(path, bytes);
  return le::get_u64(bytes, bytes.size() - 8);
}

Checkpoint read_checkpoint(const std::filesystem::path& path) { return decode_checkpoint(grid::read_file_bytes(path)); }

std::string checkpoint_hash(const std::filesystem::path& path) {
  const auto bytes = grid::read_file_bytes(path);
  if (bytes.size() < 8) {
    throw CheckpointError("checkpoint truncated");
  }
  return hex64(le::get_u64(bytes, bytes.size() - 8));
}

}  // namespace infer::ad
