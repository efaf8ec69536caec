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

#ifndef MMGD_MODEL_H_
#define MMGD_MODEL_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "mmgd/image.h"
#include "mmgd/nn.h"
#include "mmgd/tensor.h"
#include "mmgd/text.h"

namespace mmgd {

enum class SimilarityMode { kScaledDot, kCosine };

std::string_view similarity_name(SimilarityMode mode);
SimilarityMode parse_similarity(std::string_view name);

struct ModelConfig {
  std::size_t d_model = 16;
  std::size_t n_heads = 2;
  std::size_t n_enhancer_layers = 2;
  std::size_t n_decoder_layers = 2;
  std::size_t num_query = 20;
  std::size_t n_feature_levels = 2;
  std::size_t deformable_points = 4;
  std::size_t ffn_dim = 32;
  // Prior probability the contrastive bias is initialized for.
  double bias_prior = 0.01;
  std::uint64_t seed = 0;
  std::size_t vocab_size = 64;
  std::size_t max_text_len = kDefaultMaxTokens;
  SimilarityMode selection_similarity = SimilarityMode::kScaledDot;
  // Restrict text self-attention to tokens of the same phrase.
  bool cross_phrase_mask = false;
  bool text_positional = true;
  // Stop gradients through anchors between decoder layers.
  bool detach_anchors = false;
  std::size_t patch_size = 4;

  // Throws ConfigError on inconsistent values.
  void validate() const;
};

// -ln((1 - p) / p): the logit whose sigmoid is p.
double contrastive_bias_init(double prior);

// (visual @ text^T) / sqrt(d) + bias, bias a scalar tensor.
Tensor contrastive_embedding(const Tensor& visual, const Tensor& text,
                             const Tensor& bias);

struct ImageFeatures {
  // Per-level maps [d_model, H_l, W_l].
  std::vector<Tensor> levels;
  // All levels flattened row-major: [n_tokens, d_model].
  Tensor tokens;
  std::vector<LevelShape> level_shapes;
  std::vector<std::size_t> level_index;
  // Normalized (x, y) token centers, 2 per token.
  std::vector<double> reference_points;

  std::size_t size() const { return level_index.size(); }
};

struct QueryState {
  Tensor content;  // [num_query, d_model]
  Tensor anchors;  // [num_query, 4] normalized cxcywh
  // Image tokens the queries were selected from.
  std::vector<std::size_t> selected;
};

struct LayerPrediction {
  Tensor boxes;   // [num_query, 4] normalized cxcywh
  Tensor logits;  // [num_query, n_tokens]
};

struct Prediction {
  std::vector<LayerPrediction> decoder;
  LayerPrediction encoder;

  const LayerPrediction& final_layer() const { return decoder.back(); }
  // Every set the loss supervises: each decoder layer, then the encoder.
  std::vector<const LayerPrediction*> supervision_sets() const;
};

// Top-k indices by score, descending; equal scores keep the lower index first.
std::vector<std::size_t> top_k_indices(std::span<const double> scores,
                                       std::size_t k);

// Open-vocabulary grounding detector: image/text encoders, a stack of
// feature-enhancer layers, language-guided query selection and a
// cross-modality decoder with iterative box refinement.
class GroundingModel {
 public:
  explicit GroundingModel(ModelConfig config);

  const ModelConfig& config() const { return config_; }
  ParameterStore& parameters() { return params_; }
  const ParameterStore& parameters() const { return params_; }

  ImageFeatures encode_image(const Image& image) const;
  // [n_tokens, d_model]
  Tensor encode_text(const TokenizedCaption& caption) const;

  // One enhancer layer: bi-attention, then text self-attention + FFN, then
  // image deformable self-attention + FFN, each pre-norm residual.
  std::pair<Tensor, Tensor> enhancer_layer(std::size_t index,
                                           const ImageFeatures& features,
                                           const Tensor& image_tokens,
                                           const Tensor& text) const;

  // Per-image-token selection scores against the text (no gradient).
  std::vector<double> selection_scores(const Tensor& encoder_tokens,
                                       const Tensor& text) const;

  // Chooses num_query image tokens, fills the encoder prediction for them and
  // returns the initial decoder queries. Throws ConfigError when num_query
  // exceeds the number of image tokens.
  QueryState select_queries(const ImageFeatures& features,
                            const Tensor& memory, const Tensor& text,
                            LayerPrediction* encoder_out) const;

  // Self-attention, image deformable cross-attention, text cross-attention,
  // FFN; then the anchors are refined in inverse-sigmoid space.
  QueryState decoder_layer(std::size_t index, const QueryState& state,
                           const ImageFeatures& features, const Tensor& memory,
                           const Tensor& text, LayerPrediction* out) const;

  Tensor contrastive(const Tensor& visual, const Tensor& text) const;

  Prediction forward(const Image& image, const TokenizedCaption& caption) const;

  // Zeroes the output projection of every enhancer/decoder sublayer and the
  // box-delta heads, which turns those layers into identity maps.
  void zero_output_projections();

 private:
  struct EnhancerLayer {
    LayerNorm img_norm_bi;
    LayerNorm txt_norm_bi;
    BiAttention bi_attention;
    LayerNorm txt_norm_sa;
    MultiHeadAttention txt_self_attention;
    LayerNorm txt_norm_ffn;
    FeedForward txt_ffn;
    LayerNorm img_norm_da;
    DeformableAttention img_deformable;
    LayerNorm img_norm_ffn;
    FeedForward img_ffn;
  };

  struct DecoderLayer {
    LayerNorm norm_sa;
    MultiHeadAttention self_attention;
    LayerNorm norm_img;
    DeformableAttention image_cross;
    LayerNorm norm_txt;
    MultiHeadAttention text_cross;
    LayerNorm norm_ffn;
    FeedForward ffn;
    FeedForward box_delta;
  };

  Tensor positional(const ImageFeatures& features) const;
  Tensor text_mask(const TokenizedCaption& caption) const;

  ModelConfig config_;
  ParameterStore params_;

  Linear patch_embed_;
  std::vector<Linear> merge_;
  std::vector<Linear> input_proj_;
  Tensor level_embed_;

  Tensor token_embedding_;
  LayerNorm text_norm_sa_;
  MultiHeadAttention text_self_attention_;
  LayerNorm text_norm_ffn_;
  FeedForward text_ffn_;
  LayerNorm text_out_norm_;

  std::vector<EnhancerLayer> enhancer_;

  Linear enc_output_;
  LayerNorm enc_output_norm_;
  FeedForward enc_box_head_;
  Tensor query_content_;

  FeedForward query_pos_head_;
  std::vector<DecoderLayer> decoder_;
  LayerNorm decoder_norm_;

  Tensor contrastive_bias_;
};

}  // namespace mmgd

#endif  // MMGD_MODEL_H_
