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

#ifndef MMGD_DATA_H_
#define MMGD_DATA_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mmgd/image.h"
#include "mmgd/sample.h"

namespace mmgd {

inline constexpr int kUnifiedSchemaVersion = 1;

// Unified annotations: JSONL, one GroundingSample per line.
struct LoadResult {
  std::vector<GroundingSample> samples;
  // One message per clamped box.
  std::vector<std::string> warnings;
};

LoadResult parse_unified(std::istream& in);
LoadResult load_unified(const std::filesystem::path& path);

std::string unified_record(const GroundingSample& sample);
void write_unified(std::ostream& out,
                   const std::vector<GroundingSample>& samples);
void save_unified(const std::filesystem::path& path,
                  const std::vector<GroundingSample>& samples);

// Checks the sample invariants; clamps out-of-bounds boxes, appending a
// warning for each. Throws AnnotationError for anything unrecoverable.
void validate_sample(GroundingSample& sample,
                     std::vector<std::string>* warnings);

struct ConvertResult {
  std::vector<GroundingSample> samples;
  std::vector<std::string> categories;
  // Source category id -> dense index.
  std::map<std::int64_t, int> category_index;
  std::size_t dropped_crowd = 0;
  std::size_t dropped_degenerate = 0;
  std::size_t clamped = 0;
};

// COCO detection json (images, annotations, categories) to OVD samples.
ConvertResult convert_coco_style(const std::string& json_text,
                                 const std::string& split = "train");
ConvertResult convert_coco_file(const std::filesystem::path& path,
                                const std::string& split = "train");

struct DatasetManifest {
  std::string name;
  Task task = Task::kOvd;
  // Relative paths resolve against the manifest's directory.
  std::filesystem::path path;
  std::vector<std::string> categories;
  // Category name -> "r", "c" or "f".
  std::map<std::string, std::string> frequency;
  std::vector<std::string> base;
  std::vector<std::string> novel;
  std::optional<std::size_t> chunk_size;

  void validate() const;
};

DatasetManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const std::filesystem::path& path,
                   const DatasetManifest& manifest);

// Half-open index range [begin, end).
struct IndexRange {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const { return end - begin; }
  bool operator==(const IndexRange&) const = default;
};

// Sequential chunks: epoch e covers chunk (e mod ceil(n / chunk)); the last
// chunk of a cycle holds the remainder.
IndexRange epoch_partition(std::size_t n_items, std::size_t chunk_size,
                           std::size_t epoch_index);

struct SynthSpec {
  int n_images = 4;
  int n_categories = 2;
  int boxes_per_image = 2;
  int image_size = 32;
  std::uint64_t seed = 0;
};

struct SynthDataset {
  std::vector<GroundingSample> samples;
  std::vector<Image> images;
};

// Background RGB value of synthesized images.
std::vector<double> synth_background();
// Fill colour of a category, exact in 8 bits.
std::vector<double> synth_color(int category);
std::vector<std::string> synth_category_names(int n_categories);

// Flat background with non-overlapping solid rectangles whose colour encodes
// the category. Throws GenerationError when the rectangles do not fit.
SynthDataset synth_generate(const SynthSpec& spec);

// Writes <dir>/annotations.jsonl and one PPM per sample.
void write_synth(const std::filesystem::path& dir, const SynthDataset& data);

}  // namespace mmgd

#endif  // MMGD_DATA_H_
