// Copyright 2026 The mmgd Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef MMGD_CHECKPOINT_H_
#define MMGD_CHECKPOINT_H_

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "mmgd/nn.h"
#include "mmgd/tensor.h"

namespace mmgd {

inline constexpr int kCheckpointVersion = 1;

// A checkpoint is two files sharing a stem:
//   <stem>.bin       little-endian float64 values of every tensor, in order
//   <stem>.manifest  "mmgd-checkpoint <version>" then one line per tensor:
//                    <name>\t<d0>x<d1>...\t<byte offset>
struct ManifestEntry {
  std::string name;
  Shape shape;
  std::size_t byte_offset = 0;
};

struct CheckpointManifest {
  int version = kCheckpointVersion;
  std::vector<ManifestEntry> entries;

  std::size_t parameter_count() const;
};

void save_checkpoint(const std::filesystem::path& stem,
                     const ParameterStore& params);

CheckpointManifest read_manifest(const std::filesystem::path& stem);

// Overwrites the values of `params` in place. Names, order and shapes must
// match the manifest exactly; throws DataError otherwise.
void load_checkpoint(const std::filesystem::path& stem, ParameterStore& params);

}  // namespace mmgd

#endif  // MMGD_CHECKPOINT_H_
