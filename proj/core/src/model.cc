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

#include "mmgd/model.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <tuple>

#include "mmgd/error.h"
#include "mmgd/ops.h"

namespace mmgd {
namespace {

std::vector<double> normal_values(Rng& rng, std::size_t n, double stddev) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.normal(0.0, stddev);
  return v;
}

double logit(double p) { return std::log(p / (1.0 - p)); }

}  // namespace

std::string_view similarity_name(SimilarityMode mode) {
  return mode == SimilarityMode::kCosine ? "cosine" : "scaled_dot";
}

SimilarityMode parse_similarity(std::string_view name) {
  if (name == "cosine") return SimilarityMode::kCosine;
  if (name == "scaled_dot") return SimilarityMode::kScaledDot;
  throw ConfigError("unknown selection similarity '" + std::string(name) +
                    "' (expected cosine or scaled_dot)");
}

void ModelConfig::validate() const {
  if (d_model == 0 || n_heads == 0 || d_model % n_heads != 0) {
    throw ConfigError("d_model must be a positive multiple of n_heads");
  }
  if (d_model % 4 != 0) {
    throw ConfigError("d_model must be divisible by 4 for sine embeddings");
  }
  if (num_query == 0) throw ConfigError("num_query must be >= 1");
  if (n_decoder_layers == 0) throw ConfigError("need >= 1 decoder layer");
  if (n_feature_levels == 0) throw ConfigError("need >= 1 feature level");
  if (deformable_points == 0) throw ConfigError("need >= 1 sampling point");
  if (ffn_dim == 0 || patch_size == 0) {
    throw ConfigError("ffn_dim and patch_size must be positive");
  }
  if (!(bias_prior > 0.0 && bias_prior < 1.0)) {
    throw ConfigError("bias prior must lie in (0, 1)");
  }
  if (vocab_size < 3) throw ConfigError("vocab_size must cover special ids");
  if (max_text_len == 0) throw ConfigError("max_text_len must be positive");
}

double contrastive_bias_init(double prior) {
  if (!(prior > 0.0 && prior < 1.0)) {
    throw ConfigError("bias prior must lie in (0, 1)");
  }
  return -std::log((1.0 - prior) / prior);
}

Tensor contrastive_embedding(const Tensor& visual, const Tensor& text,
                             const Tensor& bias) {
  if (visual.rank() != 2 || text.rank() != 2 || visual.dim(1) != text.dim(1)) {
    throw ShapeError("contrastive embedding: feature dims differ, " +
                     shape_string(visual.shape()) + " vs " +
                     shape_string(text.shape()));
  }
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(visual.dim(1)));
  Tensor res = ops::matmul(visual, ops::transpose(text));
  res = ops::scale(res, inv_sqrt_d);
  return ops::add(res, bias);
}

std::vector<const LayerPrediction*> Prediction::supervision_sets() const {
  std::vector<const LayerPrediction*> out;
  for (const LayerPrediction& p : decoder) out.push_back(&p);
  out.push_back(&encoder);
  return out;
}

std::vector<std::size_t> top_k_indices(std::span<const double> scores,
                                       std::size_t k) {
  if (k > scores.size()) {
    throw ConfigError("cannot select " + std::to_string(k) + " of " +
                      std::to_string(scores.size()) + " items");
  }
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] > scores[b];
  });
  idx.resize(k);
  return idx;
}

GroundingModel::GroundingModel(ModelConfig config) : config_(config) {
  config_.validate();
  Rng rng(config_.seed);
  const std::size_t d = config_.d_model;
  const std::size_t heads = config_.n_heads;
  const std::size_t levels = config_.n_feature_levels;
  const std::size_t points = config_.deformable_points;
  const std::size_t ffn = config_.ffn_dim;
  ParameterStore& s = params_;

  const std::size_t patch_dim = 3 * config_.patch_size * config_.patch_size;
  patch_embed_ = Linear::create(s, rng, "backbone.patch_embed", patch_dim, d);
  for (std::size_t l = 1; l < levels; ++l) {
    merge_.push_back(Linear::create(
        s, rng, "backbone.merge" + std::to_string(l), 4 * d, d));
  }
  for (std::size_t l = 0; l < levels; ++l) {
    input_proj_.push_back(Linear::create(
        s, rng, "backbone.input_proj" + std::to_string(l), d, d));
  }
  level_embed_ =
      s.add("backbone.level_embed", {levels, d}, normal_values(rng, levels * d, 0.1));

  token_embedding_ = s.add("text.token_embedding", {config_.vocab_size, d},
                           normal_values(rng, config_.vocab_size * d, 1.0));
  text_norm_sa_ = LayerNorm::create(s, "text.norm_sa", d);
  text_self_attention_ =
      MultiHeadAttention::create(s, rng, "text.self_attention", d, heads);
  text_norm_ffn_ = LayerNorm::create(s, "text.norm_ffn", d);
  text_ffn_ = FeedForward::create(s, rng, "text.ffn", d, ffn, d);
  text_out_norm_ = LayerNorm::create(s, "text.out_norm", d);

  for (std::size_t i = 0; i < config_.n_enhancer_layers; ++i) {
    const std::string p = "enhancer" + std::to_string(i);
    EnhancerLayer e{
        LayerNorm::create(s, p + ".img_norm_bi", d),
        LayerNorm::create(s, p + ".txt_norm_bi", d),
        BiAttention::create(s, rng, p + ".bi_attention", d, heads),
        LayerNorm::create(s, p + ".txt_norm_sa", d),
        MultiHeadAttention::create(s, rng, p + ".txt_self_attention", d, heads),
        LayerNorm::create(s, p + ".txt_norm_ffn", d),
        FeedForward::create(s, rng, p + ".txt_ffn", d, ffn, d),
        LayerNorm::create(s, p + ".img_norm_da", d),
        DeformableAttention::create(s, rng, p + ".img_deformable", d, heads,
                                    levels, points),
        LayerNorm::create(s, p + ".img_norm_ffn", d),
        FeedForward::create(s, rng, p + ".img_ffn", d, ffn, d),
    };
    enhancer_.push_back(std::move(e));
  }

  enc_output_ = Linear::create(s, rng, "query_selection.enc_output", d, d);
  enc_output_norm_ = LayerNorm::create(s, "query_selection.enc_output_norm", d);
  enc_box_head_ = FeedForward::create(s, rng, "query_selection.box_head", d, d, 4);
  enc_box_head_.fc2.zero();
  query_content_ = s.add("query_selection.content", {config_.num_query, d},
                         std::vector<double>(config_.num_query * d, 0.0));

  query_pos_head_ =
      FeedForward::create(s, rng, "decoder.query_pos_head", 2 * d, d, d);
  for (std::size_t i = 0; i < config_.n_decoder_layers; ++i) {
    const std::string p = "decoder" + std::to_string(i);
    DecoderLayer layer{
        LayerNorm::create(s, p + ".norm_sa", d),
        MultiHeadAttention::create(s, rng, p + ".self_attention", d, heads),
        LayerNorm::create(s, p + ".norm_img", d),
        DeformableAttention::create(s, rng, p + ".image_cross", d, heads,
                                    levels, points),
        LayerNorm::create(s, p + ".norm_txt", d),
        MultiHeadAttention::create(s, rng, p + ".text_cross", d, heads),
        LayerNorm::create(s, p + ".norm_ffn", d),
        FeedForward::create(s, rng, p + ".ffn", d, ffn, d),
        FeedForward::create(s, rng, p + ".box_delta", d, d, 4),
    };
    layer.box_delta.fc2.zero();
    decoder_.push_back(std::move(layer));
  }
  decoder_norm_ = LayerNorm::create(s, "decoder.norm", d);

  contrastive_bias_ = s.add("contrastive.bias", {},
                            {contrastive_bias_init(config_.bias_prior)});
}

ImageFeatures GroundingModel::encode_image(const Image& image) const {
  const std::size_t levels = config_.n_feature_levels;
  const std::size_t patch = config_.patch_size;
  const std::size_t coarsest = patch << (levels - 1);
  const std::size_t min_extent = std::size_t{1} << (levels + 1);
  const std::size_t height = static_cast<std::size_t>(std::max(image.height, 0));
  const std::size_t width = static_cast<std::size_t>(std::max(image.width, 0));
  if (height < min_extent || width < min_extent || height % coarsest != 0 ||
      width % coarsest != 0) {
    throw ShapeError("image " + std::to_string(image.width) + "x" +
                     std::to_string(image.height) +
                     " too small or not a multiple of " +
                     std::to_string(coarsest) + " for " +
                     std::to_string(levels) + " feature levels");
  }
  if (image.pixels.size() != 3 * height * width) {
    throw ShapeError("image pixel buffer does not match its size");
  }

  const std::size_t d = config_.d_model;
  std::size_t gh = height / patch;
  std::size_t gw = width / patch;
  const std::size_t patch_dim = 3 * patch * patch;
  std::vector<double> patches(gh * gw * patch_dim);
  for (std::size_t i = 0; i < gh; ++i) {
    for (std::size_t j = 0; j < gw; ++j) {
      double* row = patches.data() + (i * gw + j) * patch_dim;
      for (std::size_t c = 0; c < 3; ++c) {
        for (std::size_t y = 0; y < patch; ++y) {
          for (std::size_t x = 0; x < patch; ++x) {
            row[(c * patch + y) * patch + x] =
                image.at(static_cast<int>(c), static_cast<int>(i * patch + y),
                         static_cast<int>(j * patch + x)) -
                0.5;
          }
        }
      }
    }
  }

  ImageFeatures out;
  Tensor current = ops::relu(
      patch_embed_(Tensor::from({gh * gw, patch_dim}, std::move(patches))));
  std::vector<Tensor> flat;
  std::size_t start = 0;
  for (std::size_t l = 0; l < levels; ++l) {
    if (l > 0) {
      const std::size_t nh = gh / 2;
      const std::size_t nw = gw / 2;
      std::vector<std::size_t> children;
      children.reserve(nh * nw * 4);
      for (std::size_t i = 0; i < nh; ++i) {
        for (std::size_t j = 0; j < nw; ++j) {
          children.push_back((2 * i) * gw + 2 * j);
          children.push_back((2 * i) * gw + 2 * j + 1);
          children.push_back((2 * i + 1) * gw + 2 * j);
          children.push_back((2 * i + 1) * gw + 2 * j + 1);
        }
      }
      Tensor grouped =
          ops::reshape(ops::index_select(current, children), {nh * nw, 4 * d});
      current = ops::relu(merge_[l - 1](grouped));
      gh = nh;
      gw = nw;
    }
    Tensor feat = input_proj_[l](current);
    out.levels.push_back(ops::reshape(ops::transpose(feat), {d, gh, gw}));
    flat.push_back(feat);
    out.level_shapes.push_back({gh, gw, start});
    for (std::size_t i = 0; i < gh; ++i) {
      for (std::size_t j = 0; j < gw; ++j) {
        out.level_index.push_back(l);
        out.reference_points.push_back((static_cast<double>(j) + 0.5) /
                                       static_cast<double>(gw));
        out.reference_points.push_back((static_cast<double>(i) + 0.5) /
                                       static_cast<double>(gh));
      }
    }
    start += gh * gw;
  }
  out.tokens = ops::concat(flat, 0);
  return out;
}

Tensor GroundingModel::text_mask(const TokenizedCaption& caption) const {
  const std::size_t n = caption.size();
  std::vector<int> group(n, -1);
  for (std::size_t g = 0; g < caption.phrase_groups.size(); ++g) {
    for (std::size_t t : caption.phrase_groups[g].tokens) {
      if (t < n) group[t] = static_cast<int>(g);
    }
  }
  std::vector<double> mask(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const bool allowed = i == j || (group[i] >= 0 && group[i] == group[j]);
      if (!allowed) mask[i * n + j] = -1e9;
    }
  }
  return Tensor::from({n, n}, std::move(mask));
}

Tensor GroundingModel::encode_text(const TokenizedCaption& caption) const {
  const std::size_t n = caption.size();
  if (n == 0) throw ConfigError("cannot encode an empty caption");
  if (n > config_.max_text_len) {
    throw ConfigError("caption of " + std::to_string(n) +
                      " tokens exceeds max_text_len " +
                      std::to_string(config_.max_text_len));
  }
  std::vector<std::size_t> ids;
  ids.reserve(n);
  for (int id : caption.token_ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= config_.vocab_size) {
      throw ConfigError("token id " + std::to_string(id) +
                        " outside embedding table of size " +
                        std::to_string(config_.vocab_size));
    }
    ids.push_back(static_cast<std::size_t>(id));
  }
  Tensor x = ops::index_select(token_embedding_, ids);
  if (config_.text_positional) {
    x = ops::add(x, sine_positions_1d(n, config_.d_model));
  }
  std::optional<Tensor> mask;
  if (config_.cross_phrase_mask) mask = text_mask(caption);
  Tensor h = text_norm_sa_(x);
  x = ops::add(x, text_self_attention_(h, h, h, mask));
  x = ops::add(x, text_ffn_(text_norm_ffn_(x)));
  return text_out_norm_(x);
}

Tensor GroundingModel::positional(const ImageFeatures& features) const {
  return ops::add(sine_positions_2d(features.reference_points, config_.d_model),
                  ops::index_select(level_embed_, features.level_index));
}

std::pair<Tensor, Tensor> GroundingModel::enhancer_layer(
    std::size_t index, const ImageFeatures& features,
    const Tensor& image_tokens, const Tensor& text) const {
  const EnhancerLayer& e = enhancer_.at(index);
  const Tensor pos = positional(features);
  const Tensor refs = Tensor::from({features.size(), 2},
                                   features.reference_points);
  Tensor img = image_tokens;
  Tensor txt = text;

  Tensor hi = e.img_norm_bi(img);
  Tensor ht = e.txt_norm_bi(txt);
  auto [img_update, txt_update] = e.bi_attention(ops::add(hi, pos), hi, ht);
  img = ops::add(img, img_update);
  txt = ops::add(txt, txt_update);

  Tensor h = e.txt_norm_sa(txt);
  txt = ops::add(txt, e.txt_self_attention(h, h, h));
  txt = ops::add(txt, e.txt_ffn(e.txt_norm_ffn(txt)));

  h = e.img_norm_da(img);
  img = ops::add(img, e.img_deformable(ops::add(h, pos), refs, h,
                                       features.level_shapes));
  img = ops::add(img, e.img_ffn(e.img_norm_ffn(img)));
  return {img, txt};
}

Tensor GroundingModel::contrastive(const Tensor& visual,
                                   const Tensor& text) const {
  return contrastive_embedding(visual, text, contrastive_bias_);
}

std::vector<double> GroundingModel::selection_scores(
    const Tensor& encoder_tokens, const Tensor& text) const {
  const std::size_t n = encoder_tokens.dim(0);
  const std::size_t m = text.dim(0);
  const std::size_t d = encoder_tokens.dim(1);
  auto e = encoder_tokens.data();
  auto t = text.data();
  const double bias = contrastive_bias_.item();
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
  std::vector<double> text_norm(m, 0.0);
  for (std::size_t j = 0; j < m; ++j) {
    double s = 0.0;
    for (std::size_t k = 0; k < d; ++k) s += t[j * d + k] * t[j * d + k];
    text_norm[j] = std::sqrt(s);
  }
  std::vector<double> scores(n);
  for (std::size_t i = 0; i < n; ++i) {
    double enorm = 0.0;
    for (std::size_t k = 0; k < d; ++k) enorm += e[i * d + k] * e[i * d + k];
    enorm = std::sqrt(enorm);
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < m; ++j) {
      double dot = 0.0;
      for (std::size_t k = 0; k < d; ++k) dot += e[i * d + k] * t[j * d + k];
      double s;
      if (config_.selection_similarity == SimilarityMode::kCosine) {
        const double denom = enorm * text_norm[j];
        s = denom > 0 ? dot / denom : 0.0;
      } else {
        s = dot * inv_sqrt_d + bias;
      }
      best = std::max(best, s);
    }
    scores[i] = best;
  }
  return scores;
}

QueryState GroundingModel::select_queries(const ImageFeatures& features,
                                          const Tensor& memory,
                                          const Tensor& text,
                                          LayerPrediction* encoder_out) const {
  const std::size_t n = memory.dim(0);
  if (config_.num_query > n) {
    throw ConfigError("num_query " + std::to_string(config_.num_query) +
                      " exceeds the " + std::to_string(n) + " image tokens");
  }
  Tensor enc = enc_output_norm_(enc_output_(memory));
  const std::vector<double> scores = selection_scores(enc, text);
  QueryState state;
  state.selected = top_k_indices(scores, config_.num_query);

  std::vector<double> proposals;
  proposals.reserve(state.selected.size() * 4);
  for (std::size_t idx : state.selected) {
    const double size =
        0.05 * static_cast<double>(std::size_t{1} << features.level_index[idx]);
    proposals.push_back(logit(features.reference_points[2 * idx]));
    proposals.push_back(logit(features.reference_points[2 * idx + 1]));
    proposals.push_back(logit(size));
    proposals.push_back(logit(size));
  }
  Tensor selected = ops::index_select(enc, state.selected);
  Tensor boxes = ops::sigmoid(ops::add(
      enc_box_head_(selected),
      Tensor::from({state.selected.size(), 4}, std::move(proposals))));
  if (encoder_out != nullptr) {
    encoder_out->boxes = boxes;
    encoder_out->logits = contrastive(selected, text);
  }
  state.content = query_content_;
  state.anchors = config_.detach_anchors ? boxes.detach() : boxes;
  return state;
}

QueryState GroundingModel::decoder_layer(std::size_t index,
                                         const QueryState& state,
                                         const ImageFeatures& features,
                                         const Tensor& memory,
                                         const Tensor& text,
                                         LayerPrediction* out) const {
  const DecoderLayer& layer = decoder_.at(index);
  const Tensor pos =
      query_pos_head_(sine_embed_boxes(state.anchors, config_.d_model));
  Tensor q = state.content;

  Tensor h = layer.norm_sa(q);
  Tensor hp = ops::add(h, pos);
  q = ops::add(q, layer.self_attention(hp, hp, h));

  h = layer.norm_img(q);
  q = ops::add(q, layer.image_cross(ops::add(h, pos), state.anchors, memory,
                                    features.level_shapes));

  h = layer.norm_txt(q);
  q = ops::add(q, layer.text_cross(ops::add(h, pos), text, text));

  q = ops::add(q, layer.ffn(layer.norm_ffn(q)));

  Tensor normed = decoder_norm_(q);
  Tensor refined = ops::sigmoid(
      ops::add(layer.box_delta(normed), ops::inverse_sigmoid(state.anchors)));
  if (out != nullptr) {
    out->boxes = refined;
    out->logits = contrastive(normed, text);
  }
  QueryState next;
  next.content = q;
  next.anchors = config_.detach_anchors ? refined.detach() : refined;
  next.selected = state.selected;
  return next;
}

Prediction GroundingModel::forward(const Image& image,
                                   const TokenizedCaption& caption) const {
  ImageFeatures features = encode_image(image);
  Tensor text = encode_text(caption);
  Tensor img = features.tokens;
  for (std::size_t i = 0; i < enhancer_.size(); ++i) {
    std::tie(img, text) = enhancer_layer(i, features, img, text);
  }
  Prediction pred;
  QueryState state = select_queries(features, img, text, &pred.encoder);
  pred.decoder.resize(decoder_.size());
  for (std::size_t i = 0; i < decoder_.size(); ++i) {
    state = decoder_layer(i, state, features, img, text, &pred.decoder[i]);
  }
  return pred;
}

void GroundingModel::zero_output_projections() {
  for (EnhancerLayer& e : enhancer_) {
    e.bi_attention.img_out.zero();
    e.bi_attention.txt_out.zero();
    e.txt_self_attention.out_proj.zero();
    e.txt_ffn.fc2.zero();
    e.img_deformable.out_proj.zero();
    e.img_ffn.fc2.zero();
  }
  for (DecoderLayer& l : decoder_) {
    l.self_attention.out_proj.zero();
    l.image_cross.out_proj.zero();
    l.text_cross.out_proj.zero();
    l.ffn.fc2.zero();
    l.box_delta.fc2.zero();
  }
}

}  // namespace mmgd
