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

#ifndef MMGD_TESTS_SUPPORT_FIXTURES_H_
#define MMGD_TESTS_SUPPORT_FIXTURES_H_

#include <cstdint>

#include "mmgd/image.h"
#include "mmgd/loss.h"
#include "mmgd/model.h"
#include "mmgd/nn.h"
#include "mmgd/rng.h"
#include "mmgd/text.h"

namespace mmgd::testing {

// d_model 16, 2 enhancer + 2 decoder layers, 8 queries, 2 levels, a 32x32
// synthetic image and the 6-token caption "red. green. blue.".
struct DeskCase {
  ModelConfig config;
  Image image;
  Vocabulary vocab;
  TokenizedCaption caption;
  GroundTruth gt;
};

DeskCase make_desk_case(std::uint64_t seed = 0);

// Adds N(0, scale^2) noise to every parameter value.
void jitter_parameters(ParameterStore& params, Rng& rng, double scale);

}  // namespace mmgd::testing

#endif  // MMGD_TESTS_SUPPORT_FIXTURES_H_
