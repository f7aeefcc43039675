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

#ifndef INFER_AUTODIFF_CHECKPOINT_HPP
#define INFER_AUTODIFF_CHECKPOINT_HPP

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "infer/autodiff/tensor.hpp"

/**
 * \file
 * \brief Parameter checkpoint file.
 *
 * Little-endian layout:
 *
 *     char[4] "IFCK" | u32 version | u32 metadata bytes | metadata ("key=value\n" lines)
 *     u32 parameter count
 *     per parameter: u32 name bytes | name | u32 rank | u32 dims[rank] | f32 data[]
 *     u64 FNV-1a of every preceding byte
 */

namespace infer::ad {

inline constexpr std::uint32_t kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct StoredParameter {
  std::string name;
  Shape shape;
  std::vector<float> data;
};

struct Checkpoint {
  std::map<std::string, std::string> metadata;
  std::vector<StoredParameter> parameters;
};

[[nodiscard]] std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt);

/// Throws CheckpointError on bad magic, unsupported version, truncation or checksum mismatch.
[[nodiscard]] Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes);

/// Writes the file and returns its trailing checksum.
std::uint64_t write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
[[nodiscard]] Checkpoint read_checkpoint(const std::filesystem::path& path);

/// Trailing checksum of a checkpoint file, as 16 lowercase hex digits.
[[nodiscard]] std::string checkpoint_hash(const std::filesystem::path& path);

[[nodiscard]] std::string hex64(std::uint64_t v);

}  // namespace infer::ad

#endif
