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

#include <algorithm>
#include <array>
#include <filesystem>
#include <string>

#include "mmgd/data.h"
#include "mmgd/error.h"
#include "mmgd/rng.h"

namespace mmgd {
namespace {

constexpr int kPlacementAttempts = 2000;

constexpr std::array<const char*, 8> kColorNames = {
    "red", "green", "blue", "yellow", "cyan", "magenta", "white", "black"};

constexpr std::array<std::array<int, 3>, 8> kPalette = {{{255, 0, 0},
                                                         {0, 255, 0},
                                                         {0, 0, 255},
                                                         {255, 255, 0},
                                                         {0, 255, 255},
                                                         {255, 0, 255},
                                                         {255, 255, 255},
                                                         {0, 0, 0}}};

bool overlaps(const BoxXYXY& a, const BoxXYXY& b) {
  // One pixel of background between rectangles.
  return a.x1 <= b.x2 && b.x1 <= a.x2 && a.y1 <= b.y2 && b.y1 <= a.y2;
}

}  // namespace

std::vector<double> synth_background() {
  return {128 / 255.0, 128 / 255.0, 128 / 255.0};
}

std::vector<double> synth_color(int category) {
  if (category < 0) throw ConfigError("negative category");
  if (category < static_cast<int>(kPalette.size())) {
    const auto& c = kPalette[category];
    return {c[0] / 255.0, c[1] / 255.0, c[2] / 255.0};
  }
  // Beyond the palette: distinct 6-level grid colours, skipping grey.
  int k = category - static_cast<int>(kPalette.size());
  std::array<int, 3> c{};
  int idx = 0;
  for (int n = 0;; ++n) {
    const int r = n % 6, g = (n / 6) % 6, b = (n / 36) % 6;
    if (n >= 216) throw ConfigError("too many synthetic categories");
    const bool primary = (r == 0 || r == 5) && (g == 0 || g == 5) &&
                         (b == 0 || b == 5);
    if (primary) continue;
    if (idx++ == k) {
      c = {r * 51, g * 51, b * 51};
      break;
    }
  }
  return {c[0] / 255.0, c[1] / 255.0, c[2] / 255.0};
}

std::vector<std::string> synth_category_names(int n_categories) {
  std::vector<std::string> names;
  for (int i = 0; i < n_categories; ++i) {
    names.push_back(i < static_cast<int>(kColorNames.size())
                        ? kColorNames[i]
                        : "shade" + std::to_string(i));
  }
  return names;
}

SynthDataset synth_generate(const SynthSpec& spec) {
  if (spec.n_images < 0 || spec.n_categories <= 0 ||
      spec.boxes_per_image < 0 || spec.image_size < 4) {
    throw ConfigError("invalid synthetic dataset parameters");
  }
  Rng rng(spec.seed);
  SynthDataset out;
  const auto names = synth_category_names(spec.n_categories);
  const auto bg = synth_background();
  const int size = spec.image_size;
  const int min_side = std::max(2, size / 8);
  const int max_side = std::max(min_side, size / 2);
  for (int i = 0; i < spec.n_images; ++i) {
    GroundingSample s;
    s.image_id = i;
    s.file_name = "image_" + std::to_string(i) + ".ppm";
    s.width = size;
    s.height = size;
    s.task = Task::kOvd;
    s.categories = names;
    s.split = "train";
    Image img(size, size);
    for (int c = 0; c < 3; ++c) {
      std::fill(img.pixels.begin() + c * size * size,
                img.pixels.begin() + (c + 1) * size * size, bg[c]);
    }
    for (int b = 0; b < spec.boxes_per_image; ++b) {
      bool placed = false;
      for (int attempt = 0; attempt < kPlacementAttempts && !placed;
           ++attempt) {
        const int w = min_side + static_cast<int>(rng.uniform_int(
                                     max_side - min_side + 1));
        const int h = min_side + static_cast<int>(rng.uniform_int(
                                     max_side - min_side + 1));
        const int x = static_cast<int>(rng.uniform_int(size - w + 1));
        const int y = static_cast<int>(rng.uniform_int(size - h + 1));
        const BoxXYXY box{static_cast<double>(x), static_cast<double>(y),
                          static_cast<double>(x + w),
                          static_cast<double>(y + h)};
        if (std::any_of(s.instances.begin(), s.instances.end(),
                        [&](const Instance& o) {
                          return overlaps(o.box, box);
                        })) {
          continue;
        }
        Instance inst;
        inst.box = box;
        inst.category_id =
            static_cast<int>(rng.uniform_int(spec.n_categories));
        const auto color = synth_color(inst.category_id);
        for (int c = 0; c < 3; ++c) {
          for (int yy = y; yy < y + h; ++yy) {
            for (int xx = x; xx < x + w; ++xx) img.at(c, yy, xx) = color[c];
          }
        }
        s.instances.push_back(inst);
        placed = true;
      }
      if (!placed) {
        throw GenerationError("cannot place " +
                              std::to_string(spec.boxes_per_image) +
                              " non-overlapping boxes in a " +
                              std::to_string(size) + "x" +
                              std::to_string(size) + " image");
      }
    }
    out.samples.push_back(std::move(s));
    out.images.push_back(std::move(img));
  }
  return out;
}

void write_synth(const std::filesystem::path& dir, const SynthDataset& data) {
  std::filesystem::create_directories(dir);
  save_unified(dir / "annotations.jsonl", data.samples);
  for (std::size_t i = 0; i < data.samples.size(); ++i) {
    write_ppm(dir / data.samples[i].file_name, data.images[i]);
  }
}

}  // namespace mmgd
