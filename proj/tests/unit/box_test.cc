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

#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "mmgd/box.h"
#include "mmgd/rng.h"
#include "support/oracles.h"

namespace mmgd {
namespace {

TEST(BoxTest, Conversions) {
  const BoxXYXY b{10, 20, 40, 60};
  const BoxCxCyWh c = to_cxcywh(b);
  EXPECT_DOUBLE_EQ(c.cx, 25);
  EXPECT_DOUBLE_EQ(c.cy, 40);
  EXPECT_DOUBLE_EQ(c.w, 30);
  EXPECT_DOUBLE_EQ(c.h, 40);
  EXPECT_EQ(to_xyxy(c), b);
  const BoxCxCyWh n = normalize(b, 100, 200);
  EXPECT_DOUBLE_EQ(n.cx, 0.25);
  EXPECT_DOUBLE_EQ(n.h, 0.2);
  const BoxXYXY back = denormalize(n, 100, 200);
  EXPECT_NEAR(back.x1, 10, 1e-12);
  EXPECT_NEAR(back.y2, 60, 1e-12);
}

TEST(BoxTest, IouCases) {
  const BoxXYXY a{0, 0, 2, 2};
  EXPECT_DOUBLE_EQ(iou(a, a), 1.0);
  EXPECT_DOUBLE_EQ(iou(a, {1, 1, 3, 3}), 1.0 / 7.0);
  EXPECT_DOUBLE_EQ(iou(a, {5, 5, 6, 6}), 0.0);
}

TEST(BoxTest, GiouCases) {
  const BoxXYXY a{0, 0, 1, 1};
  EXPECT_DOUBLE_EQ(giou(a, a), 1.0);
  EXPECT_DOUBLE_EQ(giou(a, {1, 0, 2, 1}), 0.0);
  EXPECT_NEAR(giou(a, {2, 0, 3, 1}), -1.0 / 3.0, 1e-15);
}

TEST(BoxTest, IouMatrixLayout) {
  const std::vector<BoxXYXY> p = {{0, 0, 2, 2}, {5, 5, 6, 6}};
  const std::vector<BoxXYXY> g = {{0, 0, 2, 2}, {1, 1, 3, 3}, {5, 5, 6, 6}};
  const auto m = iou_matrix(p, g);
  ASSERT_EQ(m.size(), 6u);
  EXPECT_DOUBLE_EQ(m[0], 1.0);
  EXPECT_DOUBLE_EQ(m[1], 1.0 / 7.0);
  EXPECT_DOUBLE_EQ(m[5], 1.0);
  EXPECT_DOUBLE_EQ(m[3], 0.0);
}

TEST(BoxProperty, GiouBoundsAndSymmetry) {
  Rng rng(5);
  for (int i = 0; i < 10000; ++i) {
    const BoxXYXY a = testing::random_box(rng, 20);
    const BoxXYXY b = testing::random_box(rng, 20);
    const double v = iou(a, b);
    const double g = giou(a, b);
    ASSERT_LE(g, v + 1e-15);
    ASSERT_GE(g, -1.0);
    ASSERT_GE(v, 0.0);
    ASSERT_LE(v, 1.0);
    ASSERT_DOUBLE_EQ(v, iou(b, a));
    ASSERT_DOUBLE_EQ(g, giou(b, a));
  }
}

}  // namespace
}  // namespace mmgd
