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

#include "benchmark/benchmark.h"
#include "mmgd/loss.h"
#include "mmgd/model.h"
#include "support/fixtures.h"

namespace mmgd {
namespace {

void BM_DeskForward(benchmark::State& state) {
  const testing::DeskCase c = testing::make_desk_case(0);
  GroundingModel model(c.config);
  for (auto _ : state) {
    benchmark::DoNotOptimize(model.forward(c.image, c.caption));
  }
}
BENCHMARK(BM_DeskForward);

void BM_DeskForwardBackward(benchmark::State& state) {
  const testing::DeskCase c = testing::make_desk_case(0);
  GroundingModel model(c.config);
  for (auto _ : state) {
    model.parameters().zero_grad();
    LossBreakdown l =
        total_loss(model.forward(c.image, c.caption), c.gt, LossConfig{});
    backward(l.total);
  }
}
BENCHMARK(BM_DeskForwardBackward);

}  // namespace
}  // namespace mmgd
