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

#include "mmgd/box.h"

#include <algorithm>

namespace mmgd {

double BoxXYXY::area() const {
  return std::max(0.0, x2 - x1) * std::max(0.0, y2 - y1);
}

BoxXYXY to_xyxy(const BoxCxCyWh& b) {
  return {b.cx - 0.5 * b.w, b.cy - 0.5 * b.h, b.cx + 0.5 * b.w,
          b.cy + 0.5 * b.h};
}

BoxCxCyWh to_cxcywh(const BoxXYXY& b) {
  return {0.5 * (b.x1 + b.x2), 0.5 * (b.y1 + b.y2), b.x2 - b.x1, b.y2 - b.y1};
}

BoxCxCyWh normalize(const BoxXYXY& b, double width, double height) {
  return to_cxcywh({b.x1 / width, b.y1 / height, b.x2 / width, b.y2 / height});
}

BoxXYXY denormalize(const BoxCxCyWh& b, double width, double height) {
  BoxXYXY n = to_xyxy(b);
  return {n.x1 * width, n.y1 * height, n.x2 * width, n.y2 * height};
}

double intersection_area(const BoxXYXY& a, const BoxXYXY& b) {
  const double w = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const double h = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  if (w <= 0 || h <= 0) return 0.0;
  return w * h;
}

double iou(const BoxXYXY& a, const BoxXYXY& b) {
  const double inter = intersection_area(a, b);
  const double uni = a.area() + b.area() - inter;
  return uni > 0 ? inter / uni : 0.0;
}

double giou(const BoxXYXY& a, const BoxXYXY& b) {
  const double inter = intersection_area(a, b);
  const double uni = a.area() + b.area() - inter;
  const double base = uni > 0 ? inter / uni : 0.0;
  const double cw = std::max(a.x2, b.x2) - std::min(a.x1, b.x1);
  const double ch = std::max(a.y2, b.y2) - std::min(a.y1, b.y1);
  const double enclosing = std::max(0.0, cw) * std::max(0.0, ch);
  if (enclosing <= 0) return base;
  return base - std::max(0.0, enclosing - uni) / enclosing;
}

double giou(const BoxCxCyWh& a, const BoxCxCyWh& b) {
  return giou(to_xyxy(a), to_xyxy(b));
}

std::vector<double> iou_matrix(std::span<const BoxXYXY> preds,
                               std::span<const BoxXYXY> gts) {
  std::vector<double> out(preds.size() * gts.size());
  for (std::size_t i = 0; i < preds.size(); ++i) {
    for (std::size_t j = 0; j < gts.size(); ++j) {
      out[i * gts.size() + j] = iou(preds[i], gts[j]);
    }
  }
  return out;
}

}  // namespace mmgd
