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

#ifndef MMGD_NN_H_
#define MMGD_NN_H_

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mmgd/rng.h"
#include "mmgd/tensor.h"

namespace mmgd {

// Ordered, named collection of trainable tensors. Names are unique; the order
// is the construction order and defines the checkpoint layout.
class ParameterStore {
 public:
  Tensor add(std::string name, Shape shape, std::vector<double> values);

  const std::vector<std::pair<std::string, Tensor>>& entries() const {
    return entries_;
  }
  std::vector<Tensor> tensors() const;
  // nullptr when absent.
  const Tensor* find(std::string_view name) const;
  std::size_t numel() const;
  void zero_grad();

 private:
  std::vector<std::pair<std::string, Tensor>> entries_;
};

std::vector<double> xavier_uniform(Rng& rng, std::size_t fan_in,
                                   std::size_t fan_out);

// y = x W + b with W stored [in, out].
struct Linear {
  Tensor weight;
  Tensor bias;

  static Linear create(ParameterStore& store, Rng& rng, const std::string& name,
                       std::size_t in, std::size_t out);
  Tensor operator()(const Tensor& x) const;
  void zero();
};

struct LayerNorm {
  Tensor gamma;
  Tensor beta;

  static LayerNorm create(ParameterStore& store, const std::string& name,
                          std::size_t dim);
  Tensor operator()(const Tensor& x) const;
};

// fc2(relu(fc1(x))).
struct FeedForward {
  Linear fc1;
  Linear fc2;

  static FeedForward create(ParameterStore& store, Rng& rng,
                            const std::string& name, std::size_t dim,
                            std::size_t hidden, std::size_t out);
  Tensor operator()(const Tensor& x) const;
};

// Scaled dot-product multi-head attention over 2-d token matrices.
struct MultiHeadAttention {
  Linear q_proj;
  Linear k_proj;
  Linear v_proj;
  Linear out_proj;
  std::size_t heads = 1;

  static MultiHeadAttention create(ParameterStore& store, Rng& rng,
                                   const std::string& name, std::size_t dim,
                                   std::size_t heads);
  // mask, when given, is an additive [n_query, n_key] bias.
  Tensor operator()(const Tensor& query, const Tensor& key,
                    const Tensor& value,
                    const std::optional<Tensor>& mask = std::nullopt) const;
};

// Image<->text cross attention sharing one attention-logit matrix per head:
// image tokens attend over text (softmax along text) and text tokens attend
// over image (softmax along image).
struct BiAttention {
  Linear img_query;
  Linear txt_key;
  Linear img_value;
  Linear txt_value;
  Linear img_out;
  Linear txt_out;
  std::size_t heads = 1;

  static BiAttention create(ParameterStore& store, Rng& rng,
                            const std::string& name, std::size_t dim,
                            std::size_t heads);
  // Returns the (image, text) updates, before the residual add.
  std::pair<Tensor, Tensor> operator()(const Tensor& img_query_in,
                                       const Tensor& img_value_in,
                                       const Tensor& txt) const;
};

struct LevelShape {
  std::size_t height = 0;
  std::size_t width = 0;
  // Row of the level's first token in the flattened memory.
  std::size_t start = 0;
};

// Multi-scale deformable attention: each query samples `points` locations per
// head and level around its reference, bilinearly, and mixes them with
// softmax weights.
struct DeformableAttention {
  Linear sampling_offsets;
  Linear attention_weights;
  Linear value_proj;
  Linear out_proj;
  std::size_t heads = 1;
  std::size_t levels = 1;
  std::size_t points = 4;

  // Offsets start at zero (every sample sits on the reference point).
  static DeformableAttention create(ParameterStore& store, Rng& rng,
                                    const std::string& name, std::size_t dim,
                                    std::size_t heads, std::size_t levels,
                                    std::size_t points);
  // reference: [n_query, 2] normalized (x, y) or [n_query, 4] normalized
  // cxcywh. For boxes, offsets are scaled by half the box size / points.
  Tensor operator()(const Tensor& query, const Tensor& reference,
                    const Tensor& memory,
                    std::span<const LevelShape> level_shapes) const;
};

// Sinusoidal table [length, dim] for 1-d positions.
Tensor sine_positions_1d(std::size_t length, std::size_t dim);
// Sinusoidal embedding of normalized 2-d points [n, 2] -> [n, dim]; first
// half encodes y, second half x.
Tensor sine_positions_2d(std::span<const double> xy, std::size_t dim);
// Differentiable sine embedding of boxes [n, 4] -> [n, 2 * dim]; each
// coordinate gets dim / 2 channels.
Tensor sine_embed_boxes(const Tensor& boxes, std::size_t dim);

}  // namespace mmgd

#endif  // MMGD_NN_H_
