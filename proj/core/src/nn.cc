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

#include "mmgd/nn.h"

#include <cmath>
#include <numbers>

#include "mmgd/error.h"
#include "mmgd/ops.h"

namespace mmgd {

Tensor ParameterStore::add(std::string name, Shape shape,
                           std::vector<double> values) {
  if (find(name) != nullptr) {
    throw ConfigError("duplicate parameter name " + name);
  }
  Tensor t = Tensor::from(std::move(shape), std::move(values), true);
  entries_.emplace_back(std::move(name), t);
  return t;
}

std::vector<Tensor> ParameterStore::tensors() const {
  std::vector<Tensor> out;
  out.reserve(entries_.size());
  for (const auto& [name, t] : entries_) out.push_back(t);
  return out;
}

const Tensor* ParameterStore::find(std::string_view name) const {
  for (const auto& [n, t] : entries_) {
    if (n == name) return &t;
  }
  return nullptr;
}

std::size_t ParameterStore::numel() const {
  std::size_t n = 0;
  for (const auto& [name, t] : entries_) n += t.numel();
  return n;
}

void ParameterStore::zero_grad() {
  for (auto& [name, t] : entries_) t.zero_grad();
}

std::vector<double> xavier_uniform(Rng& rng, std::size_t fan_in,
                                   std::size_t fan_out) {
  const double bound =
      std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::vector<double> w(fan_in * fan_out);
  for (double& v : w) v = rng.uniform(-bound, bound);
  return w;
}

Linear Linear::create(ParameterStore& store, Rng& rng, const std::string& name,
                      std::size_t in, std::size_t out) {
  Linear l;
  l.weight = store.add(name + ".weight", {in, out}, xavier_uniform(rng, in, out));
  l.bias = store.add(name + ".bias", {out}, std::vector<double>(out, 0.0));
  return l;
}

Tensor Linear::operator()(const Tensor& x) const {
  return ops::add(ops::matmul(x, weight), bias);
}

void Linear::zero() {
  for (double& v : weight.mutable_data()) v = 0.0;
  for (double& v : bias.mutable_data()) v = 0.0;
}

LayerNorm LayerNorm::create(ParameterStore& store, const std::string& name,
                            std::size_t dim) {
  LayerNorm n;
  n.gamma = store.add(name + ".gamma", {dim}, std::vector<double>(dim, 1.0));
  n.beta = store.add(name + ".beta", {dim}, std::vector<double>(dim, 0.0));
  return n;
}

Tensor LayerNorm::operator()(const Tensor& x) const {
  return ops::layer_norm(x, gamma, beta);
}

FeedForward FeedForward::create(ParameterStore& store, Rng& rng,
                                const std::string& name, std::size_t dim,
                                std::size_t hidden, std::size_t out) {
  FeedForward f;
  f.fc1 = Linear::create(store, rng, name + ".fc1", dim, hidden);
  f.fc2 = Linear::create(store, rng, name + ".fc2", hidden, out);
  return f;
}

Tensor FeedForward::operator()(const Tensor& x) const {
  return fc2(ops::relu(fc1(x)));
}

namespace {

// [n, heads * head_dim] -> [heads, n, head_dim]
Tensor split_heads(const Tensor& x, std::size_t heads) {
  const std::size_t n = x.dim(0);
  const std::size_t head_dim = x.dim(1) / heads;
  static constexpr std::size_t kOrder[] = {1, 0, 2};
  return ops::permute(ops::reshape(x, {n, heads, head_dim}), kOrder);
}

// [heads, n, head_dim] -> [n, heads * head_dim]
Tensor merge_heads(const Tensor& x) {
  const std::size_t heads = x.dim(0);
  const std::size_t n = x.dim(1);
  const std::size_t head_dim = x.dim(2);
  static constexpr std::size_t kOrder[] = {1, 0, 2};
  return ops::reshape(ops::permute(x, kOrder), {n, heads * head_dim});
}

void check_heads(std::size_t dim, std::size_t heads) {
  if (heads == 0 || dim % heads != 0) {
    throw ConfigError("model dim " + std::to_string(dim) +
                      " not divisible by " + std::to_string(heads) + " heads");
  }
}

}  // namespace

MultiHeadAttention MultiHeadAttention::create(ParameterStore& store, Rng& rng,
                                              const std::string& name,
                                              std::size_t dim,
                                              std::size_t heads) {
  check_heads(dim, heads);
  MultiHeadAttention a;
  a.q_proj = Linear::create(store, rng, name + ".q_proj", dim, dim);
  a.k_proj = Linear::create(store, rng, name + ".k_proj", dim, dim);
  a.v_proj = Linear::create(store, rng, name + ".v_proj", dim, dim);
  a.out_proj = Linear::create(store, rng, name + ".out_proj", dim, dim);
  a.heads = heads;
  return a;
}

Tensor MultiHeadAttention::operator()(const Tensor& query, const Tensor& key,
                                      const Tensor& value,
                                      const std::optional<Tensor>& mask) const {
  const std::size_t head_dim = query.dim(1) / heads;
  Tensor q = split_heads(q_proj(query), heads);
  Tensor k = split_heads(k_proj(key), heads);
  Tensor v = split_heads(v_proj(value), heads);
  Tensor logits = ops::scale(ops::matmul(q, ops::transpose(k)),
                             1.0 / std::sqrt(static_cast<double>(head_dim)));
  if (mask) logits = ops::add(logits, *mask);
  Tensor attn = ops::softmax(logits, 2);
  return out_proj(merge_heads(ops::matmul(attn, v)));
}

BiAttention BiAttention::create(ParameterStore& store, Rng& rng,
                                const std::string& name, std::size_t dim,
                                std::size_t heads) {
  check_heads(dim, heads);
  BiAttention b;
  b.img_query = Linear::create(store, rng, name + ".img_query", dim, dim);
  b.txt_key = Linear::create(store, rng, name + ".txt_key", dim, dim);
  b.img_value = Linear::create(store, rng, name + ".img_value", dim, dim);
  b.txt_value = Linear::create(store, rng, name + ".txt_value", dim, dim);
  b.img_out = Linear::create(store, rng, name + ".img_out", dim, dim);
  b.txt_out = Linear::create(store, rng, name + ".txt_out", dim, dim);
  b.heads = heads;
  return b;
}

std::pair<Tensor, Tensor> BiAttention::operator()(const Tensor& img_query_in,
                                                  const Tensor& img_value_in,
                                                  const Tensor& txt) const {
  const std::size_t head_dim = img_query_in.dim(1) / heads;
  Tensor q = split_heads(img_query(img_query_in), heads);
  Tensor k = split_heads(txt_key(txt), heads);
  Tensor logits = ops::scale(ops::matmul(q, ops::transpose(k)),
                             1.0 / std::sqrt(static_cast<double>(head_dim)));
  Tensor vi = split_heads(img_value(img_value_in), heads);
  Tensor vt = split_heads(txt_value(txt), heads);
  Tensor img_ctx = ops::matmul(ops::softmax(logits, 2), vt);
  Tensor txt_ctx = ops::matmul(ops::softmax(ops::transpose(logits), 2), vi);
  return {img_out(merge_heads(img_ctx)), txt_out(merge_heads(txt_ctx))};
}

DeformableAttention DeformableAttention::create(
    ParameterStore& store, Rng& rng, const std::string& name, std::size_t dim,
    std::size_t heads, std::size_t levels, std::size_t points) {
  check_heads(dim, heads);
  if (levels == 0 || points == 0) {
    throw ConfigError("deformable attention needs >= 1 level and point");
  }
  DeformableAttention a;
  const std::size_t n_offsets = heads * levels * points * 2;
  a.sampling_offsets = Linear::create(store, rng, name + ".sampling_offsets",
                                      dim, n_offsets);
  a.sampling_offsets.zero();
  a.attention_weights = Linear::create(store, rng, name + ".attention_weights",
                                       dim, heads * levels * points);
  a.value_proj = Linear::create(store, rng, name + ".value_proj", dim, dim);
  a.out_proj = Linear::create(store, rng, name + ".out_proj", dim, dim);
  a.heads = heads;
  a.levels = levels;
  a.points = points;
  return a;
}

Tensor DeformableAttention::operator()(
    const Tensor& query, const Tensor& reference, const Tensor& memory,
    std::span<const LevelShape> level_shapes) const {
  const std::size_t nq = query.dim(0);
  const std::size_t dim = query.dim(1);
  const std::size_t head_dim = dim / heads;
  const std::size_t ref_dim = reference.dim(1);
  if (level_shapes.size() != levels) {
    throw ShapeError("deformable attention built for " +
                     std::to_string(levels) + " levels, got " +
                     std::to_string(level_shapes.size()));
  }
  if (reference.dim(0) != nq || (ref_dim != 2 && ref_dim != 4)) {
    throw ShapeError("reference must be [n_query, 2] or [n_query, 4], got " +
                     shape_string(reference.shape()));
  }

  Tensor value = value_proj(memory);
  Tensor offsets = sampling_offsets(query);
  Tensor weights = ops::softmax(
      ops::reshape(attention_weights(query), {nq, heads, levels * points}), 2);

  // Each query's reference repeated once per sampling point.
  std::vector<std::size_t> repeat(nq * points);
  for (std::size_t q = 0; q < nq; ++q) {
    for (std::size_t p = 0; p < points; ++p) repeat[q * points + p] = q;
  }
  Tensor centers = ops::index_select(ops::slice(reference, 1, 0, 2), repeat);
  std::optional<Tensor> half_sizes;
  if (ref_dim == 4) {
    half_sizes = ops::scale(
        ops::index_select(ops::slice(reference, 1, 2, 4), repeat),
        0.5 / static_cast<double>(points));
  }

  std::vector<Tensor> head_outputs;
  head_outputs.reserve(heads);
  for (std::size_t h = 0; h < heads; ++h) {
    std::vector<Tensor> samples;
    samples.reserve(levels);
    for (std::size_t l = 0; l < levels; ++l) {
      const LevelShape& ls = level_shapes[l];
      const std::size_t hw = ls.height * ls.width;
      Tensor level_value = ops::slice(
          ops::slice(value, 0, ls.start, ls.start + hw), 1, h * head_dim,
          (h + 1) * head_dim);
      Tensor map = ops::reshape(ops::transpose(level_value),
                                {head_dim, ls.height, ls.width});

      const std::size_t col = (h * levels + l) * points * 2;
      Tensor off = ops::reshape(ops::slice(offsets, 1, col, col + points * 2),
                                {nq * points, 2});
      const Tensor extent = Tensor::from(
          {2}, {static_cast<double>(ls.width), static_cast<double>(ls.height)});
      Tensor pixel;
      if (half_sizes) {
        Tensor loc = ops::add(centers, ops::mul(off, *half_sizes));
        pixel = ops::add_scalar(ops::mul(loc, extent), -0.5);
      } else {
        // Offsets are in units of the level's pixels.
        pixel = ops::add(ops::add_scalar(ops::mul(centers, extent), -0.5), off);
      }
      Tensor sampled = ops::bilinear_sample(map, pixel);  // [head_dim, nq*P]
      samples.push_back(
          ops::reshape(ops::transpose(sampled), {nq, points, head_dim}));
    }
    Tensor stacked = ops::concat(samples, 1);  // [nq, L*P, head_dim]
    Tensor w = ops::slice(weights, 1, h, h + 1);  // [nq, 1, L*P]
    head_outputs.push_back(
        ops::reshape(ops::matmul(w, stacked), {nq, head_dim}));
  }
  return out_proj(ops::concat(head_outputs, 1));
}

namespace {

double frequency(std::size_t channel, std::size_t channels) {
  const double exponent =
      2.0 * static_cast<double>(channel / 2) / static_cast<double>(channels);
  return 1.0 / std::pow(10000.0, exponent);
}

}  // namespace

Tensor sine_positions_1d(std::size_t length, std::size_t dim) {
  std::vector<double> out(length * dim);
  for (std::size_t t = 0; t < length; ++t) {
    for (std::size_t k = 0; k < dim; ++k) {
      const double a = static_cast<double>(t) * frequency(k, dim);
      out[t * dim + k] = (k % 2 == 0) ? std::sin(a) : std::cos(a);
    }
  }
  return Tensor::from({length, dim}, std::move(out));
}

Tensor sine_positions_2d(std::span<const double> xy, std::size_t dim) {
  if (dim % 4 != 0) throw ConfigError("2-d positions need dim % 4 == 0");
  const std::size_t n = xy.size() / 2;
  const std::size_t half = dim / 2;
  const double two_pi = 2.0 * std::numbers::pi;
  std::vector<double> out(n * dim);
  for (std::size_t i = 0; i < n; ++i) {
    const double coords[2] = {xy[2 * i + 1], xy[2 * i]};
    for (std::size_t axis = 0; axis < 2; ++axis) {
      for (std::size_t k = 0; k < half; ++k) {
        const double a = coords[axis] * two_pi * frequency(k, half);
        out[i * dim + axis * half + k] = (k % 2 == 0) ? std::sin(a) : std::cos(a);
      }
    }
  }
  return Tensor::from({n, dim}, std::move(out));
}

Tensor sine_embed_boxes(const Tensor& boxes, std::size_t dim) {
  if (dim % 4 != 0) throw ConfigError("box embedding needs dim % 4 == 0");
  const std::size_t per = dim / 2;
  const std::size_t width = 4 * per;
  const double two_pi = 2.0 * std::numbers::pi;
  std::vector<double> freq(4 * width, 0.0);
  std::vector<double> phase(width, 0.0);
  for (std::size_t c = 0; c < 4; ++c) {
    for (std::size_t k = 0; k < per; ++k) {
      freq[c * width + c * per + k] = two_pi * frequency(k, per);
      phase[c * per + k] = (k % 2 == 0) ? 0.0 : std::numbers::pi / 2;
    }
  }
  Tensor angles =
      ops::add(ops::matmul(boxes, Tensor::from({4, width}, std::move(freq))),
               Tensor::from({width}, std::move(phase)));
  return ops::sin(angles);
}

}  // namespace mmgd
