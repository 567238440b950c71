// Copyright 2026 The svdetect Authors
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

// Model checkpoint container.
//
// Byte layout (all integers little-endian, doubles IEEE-754 binary64 LE):
//
//   offset  size  field
//   0       8     magic "SVDLRCN\0"
//   8       4     u32 format version (currently 1)
//   12      4     u32 header length H
//   16      H     UTF-8 header, "key=value\n" lines: model shape
//                 (lrcn.*), feature set, and the run configuration echoed
//                 under "config."
//   16+H    4     u32 tensor count T
//   ...           T tensor records:
//                   u16 name length, name bytes,
//                   u8 rank, rank x u64 dims,
//                   prod(dims) x f64 values, column-major
//
// Tensors: "lrcn.<name>" for every model parameter, optionally "norm.min"
// and "norm.max", and the "hmm.*" family when an HMM smoother was fitted.

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "svdetect/features.hpp"
#include "svdetect/lrcn.hpp"
#include "svdetect/smoothing.hpp"

namespace svdetect {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  LrcnParams params;
  std::string feature_set = "mfcc";
  std::optional<NormStats> norm;
  std::optional<HmmGmmModel> hmm;
  /// Run configuration, echoed verbatim.
  std::vector<std::pair<std::string, std::string>> config;
};

std::string encode_checkpoint(const Checkpoint& ckpt);
/// Throws DataError on a malformed or truncated container.
Checkpoint decode_checkpoint(const std::string& bytes);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace svdetect
