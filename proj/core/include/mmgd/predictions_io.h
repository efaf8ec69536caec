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

#ifndef MMGD_PREDICTIONS_IO_H_
#define MMGD_PREDICTIONS_IO_H_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "mmgd/box.h"

namespace mmgd {

// One line of predictions.jsonl. Boxes are absolute xyxy pixels.
struct PredictionRecord {
  std::int64_t image_id = 0;
  BoxXYXY box;
  double score = 0.0;
  int label_id = 0;
  int phrase_id = -1;  // -1 when absent.
  bool operator==(const PredictionRecord&) const = default;
};

std::string prediction_line(const PredictionRecord& record);
void write_predictions(std::ostream& out,
                       const std::vector<PredictionRecord>& records);
void save_predictions(const std::filesystem::path& path,
                      const std::vector<PredictionRecord>& records);

// Throws ParseError with line and byte offset on malformed input and
// DataError on invalid boxes or non-finite scores.
std::vector<PredictionRecord> parse_predictions(std::istream& in);
std::vector<PredictionRecord> load_predictions(
    const std::filesystem::path& path);

}  // namespace mmgd

#endif  // MMGD_PREDICTIONS_IO_H_
