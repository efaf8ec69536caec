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

#ifndef MMGD_BOX_H_
#define MMGD_BOX_H_

#include <span>
#include <vector>

namespace mmgd {

// Corner form. Files and metrics use absolute pixels.
struct BoxXYXY {
  double x1 = 0;
  double y1 = 0;
  double x2 = 0;
  double y2 = 0;

  double width() const { return x2 - x1; }
  double height() const { return y2 - y1; }
  double area() const;
  bool operator==(const BoxXYXY&) const = default;
};

// Center form. The model predicts boxes normalized to [0, 1] in this form.
struct BoxCxCyWh {
  double cx = 0;
  double cy = 0;
  double w = 0;
  double h = 0;
  bool operator==(const BoxCxCyWh&) const = default;
};

BoxXYXY to_xyxy(const BoxCxCyWh& b);
BoxCxCyWh to_cxcywh(const BoxXYXY& b);

// Absolute pixels <-> normalized image coordinates.
BoxCxCyWh normalize(const BoxXYXY& b, double width, double height);
BoxXYXY denormalize(const BoxCxCyWh& b, double width, double height);

double intersection_area(const BoxXYXY& a, const BoxXYXY& b);

// 0 when the union is empty.
double iou(const BoxXYXY& a, const BoxXYXY& b);

// IoU - (enclosing - union) / enclosing, in [-1, 1]. A zero-area box has IoU
// 0 but keeps its enclosure penalty.
double giou(const BoxXYXY& a, const BoxXYXY& b);
double giou(const BoxCxCyWh& a, const BoxCxCyWh& b);

// Row-major [preds.size() x gts.size()] pairwise IoU.
std::vector<double> iou_matrix(std::span<const BoxXYXY> preds,
                               std::span<const BoxXYXY> gts);

}  // namespace mmgd

#endif  // MMGD_BOX_H_
