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

#include "mmgd/hungarian.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "mmgd/error.h"

namespace mmgd {
namespace {

struct Solution {
  // (query, gt) in original indices.
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  std::vector<double> query_potential;
  std::vector<double> gt_potential;
};

// Kuhn-Munkres with potentials on the submatrix picked out by `qs` x `gs`.
Solution solve(std::span<const double> cost, std::size_t cols,
               const std::vector<std::size_t>& qs,
               const std::vector<std::size_t>& gs, std::size_t rows) {
  Solution out;
  out.query_potential.assign(rows, 0.0);
  out.gt_potential.assign(cols, 0.0);
  if (qs.empty() || gs.empty()) return out;

  // Solve with n <= m; transpose when there are more queries than gts.
  const bool transposed = qs.size() > gs.size();
  const std::size_t n = transposed ? gs.size() : qs.size();
  const std::size_t m = transposed ? qs.size() : gs.size();
  auto a = [&](std::size_t i, std::size_t j) {
    return transposed ? cost[qs[j] * cols + gs[i]] : cost[qs[i] * cols + gs[j]];
  };

  constexpr double kInf = std::numeric_limits<double>::infinity();
  // 1-based potentials; column 0 is the virtual start.
  std::vector<double> u(n + 1, 0.0);
  std::vector<double> v(m + 1, 0.0);
  std::vector<std::size_t> owner(m + 1, 0);
  std::vector<std::size_t> way(m + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    owner[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(m + 1, kInf);
    std::vector<bool> used(m + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = owner[j0];
      double delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = a(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= m; ++j) {
        if (used[j]) {
          u[owner[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (owner[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      owner[j0] = owner[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  for (std::size_t i = 0; i < n; ++i) {
    (transposed ? out.gt_potential[gs[i]] : out.query_potential[qs[i]]) =
        u[i + 1];
  }
  for (std::size_t j = 0; j < m; ++j) {
    (transposed ? out.query_potential[qs[j]] : out.gt_potential[gs[j]]) =
        v[j + 1];
  }
  for (std::size_t j = 1; j <= m; ++j) {
    if (owner[j] == 0) continue;
    const std::size_t r = owner[j] - 1;
    const std::size_t c = j - 1;
    if (transposed) {
      out.pairs.emplace_back(qs[c], gs[r]);
    } else {
      out.pairs.emplace_back(qs[r], gs[c]);
    }
  }
  std::sort(out.pairs.begin(), out.pairs.end());
  return out;
}

double query_order_total(std::span<const double> cost, std::size_t cols,
                         const std::vector<std::pair<std::size_t, std::size_t>>&
                             sorted_pairs) {
  double total = 0.0;
  for (const auto& [q, g] : sorted_pairs) total += cost[q * cols + g];
  return total;
}

}  // namespace

MatchResult hungarian_match(std::span<const double> cost, std::size_t rows,
                            std::size_t cols) {
  if (cost.size() != rows * cols) {
    throw ShapeError("cost matrix has " + std::to_string(cost.size()) +
                     " entries, expected " + std::to_string(rows) + "x" +
                     std::to_string(cols));
  }
  for (double c : cost) {
    if (!std::isfinite(c)) throw NumericError("non-finite matching cost");
  }
  MatchResult result;
  if (rows == 0 || cols == 0) return result;

  std::vector<std::size_t> all_q(rows), all_g(cols);
  for (std::size_t i = 0; i < rows; ++i) all_q[i] = i;
  for (std::size_t j = 0; j < cols; ++j) all_g[j] = j;
  const Solution first = solve(cost, cols, all_q, all_g, rows);
  std::vector<std::pair<std::size_t, std::size_t>> best = first.pairs;
  double best_total = query_order_total(cost, cols, best);
  const std::size_t k = std::min(rows, cols);

  // Walk queries in order and pull each one's gt as low as any optimum
  // allows. Only edges tight under the optimal duals can appear in an
  // optimum, so random matrices rarely trigger a re-solve.
  auto tight = [&](std::size_t q, std::size_t g) {
    const double c = cost[q * cols + g];
    const double r = c - first.query_potential[q] - first.gt_potential[g];
    return std::abs(r) <= 1e-9 * (1.0 + std::abs(c));
  };
  std::vector<std::pair<std::size_t, std::size_t>> fixed;
  std::vector<bool> gt_taken(cols, false);
  for (std::size_t q = 0; q < rows && fixed.size() < k; ++q) {
    std::size_t current = cols;
    for (const auto& [bq, bg] : best) {
      if (bq == q) current = bg;
    }
    for (std::size_t g = 0; g < current; ++g) {
      if (gt_taken[g] || !tight(q, g)) continue;
      std::vector<std::size_t> qs, gs;
      for (std::size_t r = q + 1; r < rows; ++r) qs.push_back(r);
      for (std::size_t c = 0; c < cols; ++c) {
        if (!gt_taken[c] && c != g) gs.push_back(c);
      }
      const Solution rest = solve(cost, cols, qs, gs, rows);
      if (fixed.size() + 1 + rest.pairs.size() != k) continue;
      std::vector<std::pair<std::size_t, std::size_t>> candidate = fixed;
      candidate.emplace_back(q, g);
      candidate.insert(candidate.end(), rest.pairs.begin(), rest.pairs.end());
      const double total = query_order_total(cost, cols, candidate);
      if (total <= best_total) {
        best = std::move(candidate);
        best_total = total;
        current = g;
        break;
      }
    }
    if (current < cols) {
      fixed.emplace_back(q, current);
      gt_taken[current] = true;
    }
  }

  result.pairs = std::move(best);
  result.total_cost = best_total;
  return result;
}

}  // namespace mmgd
