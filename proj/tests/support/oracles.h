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

#ifndef MMGD_TESTS_SUPPORT_ORACLES_H_
#define MMGD_TESTS_SUPPORT_ORACLES_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "mmgd/box.h"
#include "mmgd/metrics.h"
#include "mmgd/rng.h"
#include "mmgd/tensor.h"

namespace mmgd::testing {

// Central finite differences of `loss` against the analytic gradient of every
// element of `params`. Relative error uses max(|analytic|, |numeric|, floor).
struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::size_t worst_tensor = 0;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

GradCheckResult grad_check(const std::function<Tensor()>& loss,
                           const std::vector<Tensor>& params,
                           double step = 1e-5, double floor = 1e-4);

// Minimum over all injective assignments of the smaller side, summed in row
// order of the [rows x cols] matrix.
double brute_force_assignment(const std::vector<double>& cost,
                              std::size_t rows, std::size_t cols);

// 101-point interpolated AP by definition: greedy matching, PR points, and for
// each recall level the maximum precision at any point reaching it.
double brute_ap(const std::vector<Detection>& dets,
                const std::vector<GroundTruthBox>& gts, int label,
                double iou_threshold, std::size_t max_dets = 100);

// Mean over thresholds and the given labels (labels without GT skipped).
double brute_map(const std::vector<Detection>& dets,
                 const std::vector<GroundTruthBox>& gts,
                 const std::set<int>& labels);

std::map<std::size_t, double> brute_recall(
    const std::vector<Detection>& dets,
    const std::vector<GroundTruthBox>& gts,
    const std::vector<std::size_t>& ks);

double brute_rec_accuracy(const std::vector<Expression>& exprs);

std::pair<double, double> brute_gref(const std::vector<Expression>& exprs,
                                     double threshold);

// Random scene generators.
BoxXYXY random_box(Rng& rng, double size);
// Detection boxes are perturbed copies of GT boxes or random boxes; scores
// are drawn from a small set so ties occur.
void random_scene(Rng& rng, std::size_t n_images, std::size_t n_labels,
                  std::vector<Detection>& dets,
                  std::vector<GroundTruthBox>& gts,
                  std::size_t max_gt_per_image = 5,
                  std::size_t max_det_per_image = 10);

}  // namespace mmgd::testing

#endif  // MMGD_TESTS_SUPPORT_ORACLES_H_
