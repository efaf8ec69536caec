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

#include "mmgd/loss.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "mmgd/error.h"
#include "mmgd/ops.h"

namespace mmgd {
namespace {

struct Corners {
  Tensor x1, y1, x2, y2, w, h;
};

Corners corners(const Tensor& boxes) {
  Tensor cx = ops::slice(boxes, 1, 0, 1);
  Tensor cy = ops::slice(boxes, 1, 1, 2);
  Tensor w = ops::slice(boxes, 1, 2, 3);
  Tensor h = ops::slice(boxes, 1, 3, 4);
  Tensor hw = ops::scale(w, 0.5);
  Tensor hh = ops::scale(h, 0.5);
  return {ops::sub(cx, hw), ops::sub(cy, hh), ops::add(cx, hw),
          ops::add(cy, hh), w, h};
}

double sigmoid(double x) {
  return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

Tensor boxes_tensor(std::span<const BoxCxCyWh> boxes,
                    std::span<const std::size_t> order) {
  std::vector<double> v;
  v.reserve(order.size() * 4);
  for (std::size_t i : order) {
    v.insert(v.end(), {boxes[i].cx, boxes[i].cy, boxes[i].w, boxes[i].h});
  }
  return Tensor::from({order.size(), 4}, std::move(v));
}

}  // namespace

Tensor giou_loss(const Tensor& pred, const Tensor& target) {
  if (pred.shape() != target.shape() || pred.rank() != 2 || pred.dim(1) != 4) {
    throw ShapeError("giou_loss expects matching [n, 4] boxes, got " +
                     shape_string(pred.shape()) + " and " +
                     shape_string(target.shape()));
  }
  const Corners a = corners(pred);
  const Corners b = corners(target);
  Tensor iw = ops::relu(ops::sub(ops::minimum(a.x2, b.x2), ops::maximum(a.x1, b.x1)));
  Tensor ih = ops::relu(ops::sub(ops::minimum(a.y2, b.y2), ops::maximum(a.y1, b.y1)));
  Tensor inter = ops::mul(iw, ih);
  Tensor uni = ops::sub(ops::add(ops::mul(a.w, a.h), ops::mul(b.w, b.h)), inter);
  Tensor cw = ops::sub(ops::maximum(a.x2, b.x2), ops::minimum(a.x1, b.x1));
  Tensor ch = ops::sub(ops::maximum(a.y2, b.y2), ops::minimum(a.y1, b.y1));
  Tensor enclosing = ops::mul(cw, ch);
  Tensor giou = ops::sub(ops::div(inter, uni),
                         ops::div(ops::sub(enclosing, uni), enclosing));
  return ops::add_scalar(ops::neg(ops::sum(giou)),
                         static_cast<double>(pred.dim(0)));
}

Tensor focal_contrastive_loss(const Tensor& token_logits,
                              const PositiveMap& positive_map,
                              const MatchResult& matches,
                              const FocalParams& focal) {
  const std::size_t nq = token_logits.dim(0);
  const std::size_t nt = token_logits.dim(1);
  if (positive_map.cols != nt && positive_map.rows > 0) {
    throw ShapeError("positive map has " + std::to_string(positive_map.cols) +
                     " token columns, logits have " + std::to_string(nt));
  }
  std::vector<double> targets(nq * nt, 0.0);
  for (const auto& [q, g] : matches.pairs) {
    for (std::size_t t = 0; t < nt; ++t) {
      targets[q * nt + t] = positive_map.at(g, t) ? 1.0 : 0.0;
    }
  }
  const double norm =
      std::max<double>(1.0, static_cast<double>(matches.pairs.size()));
  return ops::scale(
      ops::sigmoid_focal_loss(token_logits, targets, focal.alpha, focal.gamma),
      1.0 / norm);
}

std::vector<double> match_cost(const LayerPrediction& pred,
                               const GroundTruth& gt, const LossWeights& w,
                               const FocalParams& focal) {
  const std::size_t nq = pred.boxes.dim(0);
  const std::size_t nt = pred.logits.dim(1);
  const std::size_t ng = gt.size();
  auto boxes = pred.boxes.data();
  auto logits = pred.logits.data();

  // Positive-minus-negative focal cost per (query, token).
  std::vector<double> token_cost(nq * nt);
  for (std::size_t i = 0; i < nq * nt; ++i) {
    const double p = sigmoid(logits[i]);
    const double pos =
        focal.alpha * std::pow(1.0 - p, focal.gamma) * -std::log(p + 1e-12);
    const double neg = (1.0 - focal.alpha) * std::pow(p, focal.gamma) *
                       -std::log(1.0 - p + 1e-12);
    token_cost[i] = pos - neg;
  }

  std::vector<double> cost(nq * ng, 0.0);
  for (std::size_t g = 0; g < ng; ++g) {
    double n_pos = 0.0;
    for (std::size_t t = 0; t < nt; ++t) n_pos += gt.positive_map.at(g, t);
    const BoxCxCyWh& target = gt.boxes[g];
    for (std::size_t q = 0; q < nq; ++q) {
      double cls = 0.0;
      if (n_pos > 0) {
        for (std::size_t t = 0; t < nt; ++t) {
          if (gt.positive_map.at(g, t)) cls += token_cost[q * nt + t];
        }
        cls /= n_pos;
      }
      const BoxCxCyWh b{boxes[q * 4], boxes[q * 4 + 1], boxes[q * 4 + 2],
                        boxes[q * 4 + 3]};
      const double l1 = std::abs(b.cx - target.cx) + std::abs(b.cy - target.cy) +
                        std::abs(b.w - target.w) + std::abs(b.h - target.h);
      const double g_cost = 1.0 - giou(b, target);
      cost[q * ng + g] = w.cls * cls + w.l1 * l1 + w.giou * g_cost;
    }
  }
  return cost;
}

LossBreakdown total_loss(const Prediction& prediction, const GroundTruth& gt,
                         const LossConfig& config) {
  if (gt.positive_map.rows != gt.size()) {
    throw ShapeError("ground truth has " + std::to_string(gt.size()) +
                     " boxes but " + std::to_string(gt.positive_map.rows) +
                     " positive-map rows");
  }
  LossBreakdown out;
  std::vector<Tensor> terms;
  for (const LayerPrediction* set : prediction.supervision_sets()) {
    LayerLoss layer;
    const std::size_t nq = set->boxes.dim(0);
    if (gt.size() > 0) {
      const std::vector<double> cost =
          match_cost(*set, gt, config.matching, config.focal);
      layer.matches = hungarian_match(cost, nq, gt.size());
    }
    Tensor cls = focal_contrastive_loss(set->logits, gt.positive_map,
                                        layer.matches, config.focal);
    terms.push_back(ops::scale(cls, config.loss.cls));
    layer.cls = cls.item();

    if (!layer.matches.pairs.empty()) {
      std::vector<std::size_t> queries;
      std::vector<std::size_t> targets;
      for (const auto& [q, g] : layer.matches.pairs) {
        queries.push_back(q);
        targets.push_back(g);
      }
      const double norm = static_cast<double>(queries.size());
      Tensor matched = ops::index_select(set->boxes, queries);
      Tensor target = boxes_tensor(gt.boxes, targets);
      Tensor l1 = ops::scale(ops::sum(ops::abs(ops::sub(matched, target))),
                             1.0 / norm);
      Tensor gl = ops::scale(giou_loss(matched, target), 1.0 / norm);
      terms.push_back(ops::scale(l1, config.loss.l1));
      terms.push_back(ops::scale(gl, config.loss.giou));
      layer.l1 = l1.item();
      layer.giou = gl.item();
    }
    out.cls += layer.cls;
    out.l1 += layer.l1;
    out.giou += layer.giou;
    out.per_layer.push_back(std::move(layer));
  }
  Tensor total = terms.front();
  for (std::size_t i = 1; i < terms.size(); ++i) total = ops::add(total, terms[i]);
  out.total = total;
  out.total_value = total.item();
  return out;
}

}  // namespace mmgd
