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

#include "support/fixtures.h"

#include <string>
#include <vector>

#include "mmgd/data.h"

namespace mmgd::testing {

DeskCase make_desk_case(std::uint64_t seed) {
  DeskCase c;
  c.config.d_model = 16;
  c.config.n_heads = 2;
  c.config.n_enhancer_layers = 2;
  c.config.n_decoder_layers = 2;
  c.config.num_query = 8;
  c.config.n_feature_levels = 2;
  c.config.seed = seed;

  SynthSpec spec;
  spec.n_images = 1;
  spec.n_categories = 3;
  spec.boxes_per_image = 3;
  spec.image_size = 32;
  spec.seed = seed;
  const SynthDataset data = synth_generate(spec);
  c.image = data.images[0];
  const GroundingSample& s = data.samples[0];

  const AssembledCaption cap = sample_caption(s);
  const std::vector<std::string> texts = {cap.caption};
  c.vocab = Vocabulary::from_texts(texts);
  c.config.vocab_size = c.vocab.size();
  c.caption = tokenize(cap.caption, c.vocab, c.config.max_text_len,
                       cap.phrases);
  std::vector<int> ids;
  for (const Instance& inst : s.instances) {
    ids.push_back(inst.category_id);
    c.gt.boxes.push_back(normalize(inst.box, s.width, s.height));
  }
  c.gt.positive_map = build_positive_map(c.caption, ids);
  return c;
}

void jitter_parameters(ParameterStore& params, Rng& rng, double scale) {
  for (const auto& [name, t] : params.entries()) {
    Tensor p = t;
    for (double& v : p.mutable_data()) v += scale * rng.normal();
  }
}

}  // namespace mmgd::testing
