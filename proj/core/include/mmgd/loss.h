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

#ifndef MMGD_LOSS_H_
#define MMGD_LOSS_H_

#include <cstddef>
#include <span>
#include <vector>

#include "mmgd/box.h"
#include "mmgd/hungarian.h"
#include "mmgd/model.h"
#include "mmgd/tensor.h"
#include "mmgd/text.h"

namespace mmgd {

struct LossWeights {
  double cls = 2.0;
  double l1 = 5.0;
  double giou = 2.0;
};

struct FocalParams {
  double alpha = 0.25;
  double gamma = 2.0;
};

struct LossConfig {
  LossWeights loss;
  LossWeights matching;
  FocalParams focal;
};

// Targets for one image: normalized cxcywh boxes and their token rows.
struct GroundTruth {
  std::vector<BoxCxCyWh> boxes;
  PositiveMap positive_map;

  std::size_t size() const { return boxes.size(); }
};

// Differentiable 1 - GIoU summed over rows of two [n, 4] cxcywh tensors.
Tensor giou_loss(const Tensor& pred, const Tensor& target);

// Sigmoid focal loss over every (query, token) cell. Matched queries take
// their ground truth's token row as target, all other cells are negatives.
// Normalized by the number of matched queries (at least 1).
Tensor focal_contrastive_loss(const Tensor& token_logits,
                              const PositiveMap& positive_map,
                              const MatchResult& matches,
                              const FocalParams& focal);

// Row-major [num_query x n_gt] matching cost:
//   w.cls * focal classification cost over the GT's tokens
// + w.l1 * |pred - gt|_1 + w.giou * (1 - GIoU)
std::vector<double> match_cost(const LayerPrediction& pred,
                               const GroundTruth& gt, const LossWeights& w,
                               const FocalParams& focal);

struct LayerLoss {
  double cls = 0.0;
  double l1 = 0.0;
  double giou = 0.0;
  MatchResult matches;
};

struct LossBreakdown {
  // Unweighted sums over all supervision sets.
  double cls = 0.0;
  double l1 = 0.0;
  double giou = 0.0;
  // Decoder layers in order, then the encoder output.
  std::vector<LayerLoss> per_layer;
  double total_value = 0.0;
  // Differentiable weighted total.
  Tensor total;
};

// Independent Hungarian matching and weighted cls + L1 + GIoU per supervision
// set, summed. An empty ground truth yields the all-negative focal term only.
LossBreakdown total_loss(const Prediction& prediction, const GroundTruth& gt,
                         const LossConfig& config);

}  // namespace mmgd

#endif  // MMGD_LOSS_H_
