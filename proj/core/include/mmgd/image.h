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

#ifndef MMGD_IMAGE_H_
#define MMGD_IMAGE_H_

#include <cstddef>
#include <filesystem>
#include <vector>

namespace mmgd {

// Planar RGB image, values in [0, 1], laid out [3, height, width].
struct Image {
  int width = 0;
  int height = 0;
  std::vector<double> pixels;

  Image() = default;
  Image(int w, int h, double fill = 0.0)
      : width(w), height(h), pixels(3 * static_cast<std::size_t>(w) * h, fill) {}

  double& at(int channel, int y, int x) {
    return pixels[(static_cast<std::size_t>(channel) * height + y) * width + x];
  }
  double at(int channel, int y, int x) const {
    return pixels[(static_cast<std::size_t>(channel) * height + y) * width + x];
  }
  bool operator==(const Image&) const = default;
};

// Binary PPM (P6, maxval 255). Values are quantized to 8 bits on write.
void write_ppm(const std::filesystem::path& path, const Image& image);
Image read_ppm(const std::filesystem::path& path);

}  // namespace mmgd

#endif  // MMGD_IMAGE_H_
