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

#ifndef MMGD_OPTIM_H_
#define MMGD_OPTIM_H_

#include <span>
#include <vector>

#include "mmgd/tensor.h"

namespace mmgd {

struct AdamWOptions {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-4;
};

// Per-parameter first/second moment estimates.
struct AdamWState {
  std::vector<double> m;
  std::vector<double> v;
  long step = 0;
};

// One decoupled-weight-decay Adam update of `param` in place:
//   p <- p - lr*wd*p;  m,v updated;  p <- p - lr * m_hat / (sqrt(v_hat) + eps)
// Throws ConfigError for lr <= 0 or betas outside [0, 1).
void adamw_step(std::span<double> param, std::span<const double> grad,
                AdamWState& state, const AdamWOptions& options);

// AdamW over a fixed list of parameter tensors. Parameters without a gradient
// still receive weight decay, as in the usual implementations.
class AdamW {
 public:
  AdamW(std::vector<Tensor> params, AdamWOptions options);

  void step();
  void zero_grad();

  const AdamWOptions& options() const { return options_; }

 private:
  std::vector<Tensor> params_;
  std::vector<AdamWState> states_;
  AdamWOptions options_;
};

}  // namespace mmgd

#endif  // MMGD_OPTIM_H_
