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

#ifndef MMGD_SAMPLE_H_
#define MMGD_SAMPLE_H_

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "mmgd/box.h"

namespace mmgd {

enum class Task { kOvd, kPg, kRec };

std::string_view task_name(Task task);
// Accepts "OVD", "PG", "REC" (case-insensitive); throws DataError otherwise.
Task parse_task(std::string_view name);

// A phrase of a caption, addressed by character offsets [begin, end).
// `tag` carries optional per-phrase metadata such as "PRES"/"ABS".
struct PhraseSpan {
  int id = 0;
  std::size_t begin = 0;
  std::size_t end = 0;
  std::string tag;
  bool operator==(const PhraseSpan&) const = default;
};

// One annotated object. OVD instances reference a category, PG/REC instances
// a phrase of the caption.
struct Instance {
  BoxXYXY box;
  int category_id = -1;
  int phrase_id = -1;
  bool operator==(const Instance&) const = default;
};

// Unified annotation record shared by detection, grounding and referring
// datasets.
struct GroundingSample {
  std::int64_t image_id = 0;
  std::string file_name;
  int width = 0;
  int height = 0;
  Task task = Task::kOvd;
  std::string caption;
  std::vector<PhraseSpan> phrases;
  std::vector<std::string> categories;
  std::vector<Instance> instances;
  std::string split;
  bool operator==(const GroundingSample&) const = default;

  // The id an instance is supervised by: category for OVD, phrase otherwise.
  int label_of(const Instance& inst) const {
    return task == Task::kOvd ? inst.category_id : inst.phrase_id;
  }
};

}  // namespace mmgd

#endif  // MMGD_SAMPLE_H_
