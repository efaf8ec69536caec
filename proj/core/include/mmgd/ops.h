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

#ifndef MMGD_OPS_H_
#define MMGD_OPS_H_

#include <cstddef>
#include <span>
#include <vector>

#include "mmgd/tensor.h"

// Differentiable operations. Every op checks its output for NaN/Inf and
// throws NumericError naming the op instead of propagating non-finite values.
namespace mmgd::ops {

// Elementwise binary ops. `b` may either match `a` exactly or match a
// trailing suffix of a's shape, in which case it is broadcast over the
// leading dimensions (bias rows, attention masks).
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
// Same-shape only.
Tensor div(const Tensor& a, const Tensor& b);
Tensor minimum(const Tensor& a, const Tensor& b);
Tensor maximum(const Tensor& a, const Tensor& b);

Tensor scale(const Tensor& a, double factor);
Tensor add_scalar(const Tensor& a, double value);
Tensor neg(const Tensor& a);

Tensor relu(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
Tensor abs(const Tensor& a);
Tensor sin(const Tensor& a);
// log(x / (1 - x)) with x clamped into [eps, 1 - eps]; zero gradient where
// the clamp is active.
Tensor inverse_sigmoid(const Tensor& a, double eps = 1e-5);

Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);

// [.., m, k] @ [.., k, n]. Batch dims must match, or one side may be 2-d and
// is broadcast across the other's batch.
Tensor matmul(const Tensor& a, const Tensor& b);

// Swaps the last two axes.
Tensor transpose(const Tensor& a);
Tensor permute(const Tensor& a, std::span<const std::size_t> order);
Tensor reshape(const Tensor& a, Shape shape);
Tensor slice(const Tensor& a, std::size_t axis, std::size_t begin,
             std::size_t end);
Tensor concat(std::span<const Tensor> parts, std::size_t axis);
// Gathers entries along axis 0; indices may repeat.
Tensor index_select(const Tensor& a, std::span<const std::size_t> indices);

// Max-subtracted softmax along `axis`.
Tensor softmax(const Tensor& x, std::size_t axis);
// Normalizes over the last axis; gamma/beta have the last axis' extent.
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                  double eps = 1e-5);

// Bilinear interpolation of a [C, H, W] map at continuous pixel coordinates
// points [n, 2] = (x, y), where (j, i) addresses the stored value map[:, i, j].
// Out-of-range neighbours read as zero. Returns [C, n]; differentiable in
// both the map and the point coordinates.
Tensor bilinear_sample(const Tensor& feature_map, const Tensor& points);

// Sum over all cells of the sigmoid focal loss
//   t=1: -alpha (1-p)^gamma log p,  t=0: -(1-alpha) p^gamma log(1-p)
// with p = sigmoid(logits). `targets` holds 0/1 per cell.
Tensor sigmoid_focal_loss(const Tensor& logits, std::span<const double> targets,
                          double alpha, double gamma);

}  // namespace mmgd::ops

#endif  // MMGD_OPS_H_
