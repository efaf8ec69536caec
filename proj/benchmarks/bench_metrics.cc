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

#include <vector>

#include "benchmark/benchmark.h"
#include "mmgd/metrics.h"
#include "mmgd/rng.h"

namespace mmgd {
namespace {

BoxXYXY jittered(const BoxXYXY& b, Rng& rng) {
  const double dx = rng.uniform(-3.0, 3.0);
  const double dy = rng.uniform(-3.0, 3.0);
  return {b.x1 + dx, b.y1 + dy, b.x2 + dx, b.y2 + dy};
}

void BM_AveragePrecision(benchmark::State& state) {
  const auto images = static_cast<std::int64_t>(state.range(0));
  Rng rng(3);
  std::vector<GroundTruthBox> gts;
  std::vector<Detection> dets;
  for (std::int64_t img = 0; img < images; ++img) {
    for (int k = 0; k < 8; ++k) {
      const double x = rng.uniform(0.0, 80.0);
      const double y = rng.uniform(0.0, 80.0);
      const BoxXYXY box{x, y, x + rng.uniform(5.0, 20.0),
                        y + rng.uniform(5.0, 20.0)};
      const int label = static_cast<int>(rng.uniform_int(10));
      gts.push_back({img, box, label});
      for (int d = 0; d < 4; ++d) {
        dets.push_back({img, jittered(box, rng), rng.uniform(), label});
      }
    }
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(average_precision(dets, gts));
  }
  state.SetItemsProcessed(state.iterations() *
                          static_cast<std::int64_t>(dets.size()));
}
BENCHMARK(BM_AveragePrecision)->Arg(10)->Arg(100);

}  // namespace
}  // namespace mmgd
