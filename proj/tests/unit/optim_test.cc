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

#include "mmgd/error.h"
#include "mmgd/ops.h"
#include "mmgd/optim.h"

namespace mmgd {
namespace {

TEST(AdamWTest, ZeroGradientZeroDecayLeavesParams) {
  std::vector<double> p = {1.5, -2.0};
  const std::vector<double> g = {0.0, 0.0};
  AdamWState state;
  AdamWOptions opts;
  opts.weight_decay = 0.0;
  adamw_step(p, g, state, opts);
  EXPECT_EQ(p[0], 1.5);
  EXPECT_EQ(p[1], -2.0);
}

TEST(AdamWTest, FirstStepMovesByLearningRate) {
  std::vector<double> p = {3.0};
  const std::vector<double> g = {1.0};
  AdamWState state;
  AdamWOptions opts;
  opts.lr = 0.1;
  opts.weight_decay = 0.0;
  adamw_step(p, g, state, opts);
  // m_hat = v_hat = 1, step = lr / (1 + eps).
  EXPECT_NEAR(p[0], 3.0 - 0.1 / (1.0 + 1e-8), 1e-15);
}

TEST(AdamWTest, DecoupledDecayWithZeroGradient) {
  std::vector<double> p = {2.0};
  const std::vector<double> g = {0.0};
  AdamWState state;
  AdamWOptions opts;
  opts.lr = 0.01;
  opts.weight_decay = 0.5;
  adamw_step(p, g, state, opts);
  EXPECT_DOUBLE_EQ(p[0], 2.0 - 0.01 * 0.5 * 2.0);
}

TEST(AdamWTest, RejectsBadOptions) {
  std::vector<double> p = {1.0};
  const std::vector<double> g = {1.0};
  AdamWState state;
  AdamWOptions opts;
  opts.lr = 0.0;
  EXPECT_THROW(adamw_step(p, g, state, opts), ConfigError);
  opts.lr = -1.0;
  EXPECT_THROW(AdamW({}, opts), ConfigError);
  opts.lr = 1e-3;
  opts.beta1 = 1.0;
  EXPECT_THROW(adamw_step(p, g, state, opts), ConfigError);
}

TEST(AdamWTest, MinimizesQuadratic) {
  Tensor x = Tensor::from({2}, {3.0, -4.0}, true);
  AdamWOptions opts;
  opts.lr = 0.05;
  opts.weight_decay = 0.0;
  AdamW opt({x}, opts);
  for (int i = 0; i < 2000; ++i) {
    opt.zero_grad();
    backward(ops::sum(ops::mul(x, x)));
    opt.step();
  }
  EXPECT_NEAR(x[0], 0.0, 1e-3);
  EXPECT_NEAR(x[1], 0.0, 1e-3);
}

TEST(AdamWTest, DeterministicAcrossRuns) {
  auto run = [] {
    Tensor x = Tensor::from({3}, {0.3, -1.2, 2.2}, true);
    AdamW opt({x}, {});
    for (int i = 0; i < 50; ++i) {
      opt.zero_grad();
      backward(ops::sum(ops::sin(x)));
      opt.step();
    }
    return std::vector<double>(x.data().begin(), x.data().end());
  };
  EXPECT_EQ(run(), run());
}

}  // namespace
}  // namespace mmgd
