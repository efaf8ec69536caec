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

#include "mmgd/optim.h"

#include <cmath>
#include <string>

#include "mmgd/error.h"

namespace mmgd {
namespace {

void validate(const AdamWOptions& o) {
  if (!(o.lr > 0)) {
    throw ConfigError("AdamW learning rate must be > 0, got " +
                      std::to_string(o.lr));
  }
  if (!(o.beta1 >= 0 && o.beta1 < 1 && o.beta2 >= 0 && o.beta2 < 1)) {
    throw ConfigError("AdamW betas must lie in [0, 1)");
  }
  if (!(o.eps > 0) || o.weight_decay < 0) {
    throw ConfigError("AdamW eps must be > 0 and weight decay >= 0");
  }
}

}  // namespace

void adamw_step(std::span<double> param, std::span<const double> grad,
                AdamWState& state, const AdamWOptions& options) {
  validate(options);
  if (!grad.empty() && grad.size() != param.size()) {
    throw ShapeError("adamw_step: gradient length does not match parameter");
  }
  if (state.m.empty()) {
    state.m.assign(param.size(), 0.0);
    state.v.assign(param.size(), 0.0);
  }
  ++state.step;
  const double c1 = 1.0 - std::pow(options.beta1, state.step);
  const double c2 = 1.0 - std::pow(options.beta2, state.step);
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double g = grad.empty() ? 0.0 : grad[i];
    param[i] -= options.lr * options.weight_decay * param[i];
    state.m[i] = options.beta1 * state.m[i] + (1.0 - options.beta1) * g;
    state.v[i] = options.beta2 * state.v[i] + (1.0 - options.beta2) * g * g;
    const double m_hat = state.m[i] / c1;
    const double v_hat = state.v[i] / c2;
    param[i] -= options.lr * m_hat / (std::sqrt(v_hat) + options.eps);
  }
}

AdamW::AdamW(std::vector<Tensor> params, AdamWOptions options)
    : params_(std::move(params)),
      states_(params_.size()),
      options_(options) {
  validate(options_);
}

void AdamW::step() {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    adamw_step(params_[i].mutable_data(), params_[i].grad(), states_[i],
               options_);
  }
}

void AdamW::zero_grad() {
  for (Tensor& p : params_) p.zero_grad();
}

}  // namespace mmgd
