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

#include "mmgd/image.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

#include "mmgd/error.h"

namespace mmgd {

void write_ppm(const std::filesystem::path& path, const Image& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write image " + path.string());
  out << "P6\n" << image.width << " " << image.height << "\n255\n";
  std::string row(static_cast<std::size_t>(image.width) * 3, '\0');
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      for (int c = 0; c < 3; ++c) {
        const double v = std::clamp(image.at(c, y, x), 0.0, 1.0);
        row[static_cast<std::size_t>(x) * 3 + c] =
            static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0)));
      }
    }
    out.write(row.data(), static_cast<std::streamsize>(row.size()));
  }
}

Image read_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open image " + path.string());
  std::string magic;
  int width = 0;
  int height = 0;
  int maxval = 0;
  in >> magic >> width >> height >> maxval;
  if (magic != "P6" || width <= 0 || height <= 0 || maxval != 255) {
    throw DataError("unsupported image format in " + path.string() +
                    " (expected binary P6, maxval 255)");
  }
  in.get();
  Image image(width, height);
  std::string row(static_cast<std::size_t>(width) * 3, '\0');
  for (int y = 0; y < height; ++y) {
    if (!in.read(row.data(), static_cast<std::streamsize>(row.size()))) {
      throw DataError("truncated image " + path.string());
    }
    for (int x = 0; x < width; ++x) {
      for (int c = 0; c < 3; ++c) {
        image.at(c, y, x) =
            static_cast<unsigned char>(row[static_cast<std::size_t>(x) * 3 + c]) /
            255.0;
      }
    }
  }
  return image;
}

}  // namespace mmgd
