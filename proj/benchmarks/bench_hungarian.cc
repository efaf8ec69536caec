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
#include "mmgd/hungarian.h"
#include "mmgd/rng.h"

namespace mmgd {
namespace {

void BM_HungarianRandom(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  const auto cols = static_cast<std::size_t>(state.range(1));
  Rng rng(1);
  std::vector<double> cost(rows * cols);
  for (double& v : cost) v = rng.uniform(0.0, 1.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(hungarian_match(cost, rows, cols));
  }
}
BENCHMARK(BM_HungarianRandom)->Args({9, 7})->Args({100, 10})->Args({900, 30});

void BM_HungarianTies(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(2);
  std::vector<double> cost(n * n);
  for (double& v : cost) v = static_cast<double>(rng.uniform_int(3));
  for (auto _ : state) {
    benchmark::DoNotOptimize(hungarian_match(cost, n, n));
  }
}
BENCHMARK(BM_HungarianTies)->Arg(8)->Arg(32);

}  // namespace
}  // namespace mmgd
