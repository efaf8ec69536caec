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

#ifndef MMGD_HUNGARIAN_H_
#define MMGD_HUNGARIAN_H_

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace mmgd {

struct MatchResult {
  // (query, gt) pairs sorted by query index.
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  double total_cost = 0.0;
};

// Minimum-cost injective assignment on a row-major [rows x cols] matrix
// (Kuhn-Munkres with potentials, O(min^2 * max)). min(rows, cols) pairs are
// returned. Among equal-cost optima the lexicographically smallest list of
// (query, gt) pairs wins.
// Throws NumericError on a non-finite cost.
MatchResult hungarian_match(std::span<const double> cost, std::size_t rows,
                            std::size_t cols);

}  // namespace mmgd

#endif  // MMGD_HUNGARIAN_H_
