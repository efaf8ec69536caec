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

#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "mmgd/error.h"
#include "mmgd/ops.h"
#include "mmgd/rng.h"
#include "mmgd/tensor.h"
#include "support/oracles.h"

namespace mmgd {
namespace {

using testing::grad_check;

Tensor random_tensor(Rng& rng, Shape shape, double lo = -1.0,
                     double hi = 1.0) {
  std::vector<double> v(shape_numel(shape));
  for (double& x : v) x = rng.uniform(lo, hi);
  return Tensor::from(std::move(shape), std::move(v), true);
}

void expect_grad_ok(const std::function<Tensor()>& f,
                    const std::vector<Tensor>& params, double tol = 1e-6) {
  const auto r = grad_check(f, params, 1e-6, 1e-6);
  EXPECT_LT(r.max_rel_error, tol)
      << "tensor " << r.worst_tensor << " index " << r.worst_index
      << " analytic " << r.worst_analytic << " numeric " << r.worst_numeric;
}

TEST(TensorTest, FactoriesAndShape) {
  const Tensor z = Tensor::zeros({2, 3});
  EXPECT_EQ(z.numel(), 6u);
  EXPECT_EQ(z.rank(), 2u);
  EXPECT_EQ(z.dim(1), 3u);
  EXPECT_EQ(shape_string(z.shape()), "[2, 3]");
  const Tensor s = Tensor::scalar(4.5);
  EXPECT_EQ(s.rank(), 0u);
  EXPECT_DOUBLE_EQ(s.item(), 4.5);
  EXPECT_THROW(Tensor::from({2, 2}, {1.0, 2.0}), ShapeError);
  EXPECT_THROW(z.item(), ShapeError);
}

TEST(TensorTest, DetachAndCloneDropHistory) {
  Tensor a = Tensor::from({2}, {1.0, 2.0}, true);
  const Tensor b = ops::scale(a, 3.0);
  EXPECT_FALSE(b.is_leaf());
  const Tensor d = b.detach();
  EXPECT_TRUE(d.is_leaf());
  EXPECT_FALSE(d.requires_grad());
  EXPECT_DOUBLE_EQ(d[1], 6.0);
  Tensor c = a.clone();
  c.mutable_data()[0] = 9.0;
  EXPECT_DOUBLE_EQ(a[0], 1.0);
}

TEST(TensorTest, LeafGradientsAccumulateAcrossBackward) {
  Tensor a = Tensor::from({3}, {1.0, 2.0, 3.0}, true);
  backward(ops::sum(ops::mul(a, a)));
  backward(ops::sum(a));
  ASSERT_TRUE(a.has_grad());
  EXPECT_DOUBLE_EQ(a.grad()[0], 3.0);
  EXPECT_DOUBLE_EQ(a.grad()[2], 7.0);
  a.zero_grad();
  EXPECT_FALSE(a.has_grad());
}

TEST(TensorTest, SharedSubgraphReceivesBothPaths) {
  Tensor a = Tensor::from({1}, {2.0}, true);
  const Tensor b = ops::mul(a, a);
  backward(ops::sum(ops::add(b, b)));
  EXPECT_DOUBLE_EQ(a.grad()[0], 8.0);
}

TEST(TensorTest, BackwardRequiresScalar) {
  Tensor a = Tensor::from({2}, {1.0, 2.0}, true);
  EXPECT_THROW(backward(ops::scale(a, 2.0)), ConfigError);
}

TEST(TensorTest, TapeOrdersInputsFirst) {
  Tensor a = Tensor::from({2}, {1.0, 2.0}, true);
  const Tensor loss = ops::sum(ops::exp(ops::scale(a, 2.0)));
  Tape tape(loss);
  const auto& nodes = tape.nodes();
  ASSERT_EQ(nodes.size(), 4u);
  EXPECT_EQ(nodes.front(), a.node().get());
  EXPECT_EQ(nodes.back(), loss.node().get());
}

TEST(TensorTest, NonFiniteResultsThrow) {
  const Tensor z = Tensor::from({1}, {0.0}, true);
  EXPECT_THROW(ops::log(z), NumericError);
  EXPECT_THROW(ops::div(Tensor::from({1}, {1.0}), z), NumericError);
  EXPECT_THROW(ops::exp(Tensor::from({1}, {1000.0})), NumericError);
}

TEST(OpsTest, BroadcastSuffix) {
  const Tensor a = Tensor::from({2, 3}, {1, 2, 3, 4, 5, 6});
  const Tensor b = Tensor::from({3}, {10, 20, 30});
  const Tensor c = ops::add(a, b);
  EXPECT_DOUBLE_EQ(c.at(1, 2), 36.0);
  EXPECT_THROW(ops::add(a, Tensor::from({2}, {1, 2})), ShapeError);
}

TEST(OpsTest, MatmulValues) {
  const Tensor a = Tensor::from({2, 2}, {1, 2, 3, 4});
  const Tensor b = Tensor::from({2, 1}, {5, 6});
  const Tensor c = ops::matmul(a, b);
  EXPECT_DOUBLE_EQ(c[0], 17.0);
  EXPECT_DOUBLE_EQ(c[1], 39.0);
  EXPECT_THROW(ops::matmul(a, Tensor::from({3, 1}, {1, 2, 3})), ShapeError);
}

TEST(OpsTest, SoftmaxRowsSumToOne) {
  Rng rng(3);
  const Tensor x = random_tensor(rng, {3, 5}, -50, 50);
  const Tensor s = ops::softmax(x, 1);
  for (std::size_t r = 0; r < 3; ++r) {
    double total = 0;
    for (std::size_t c = 0; c < 5; ++c) total += s.at(r, c);
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
}

TEST(OpsTest, LayerNormNormalizes) {
  Rng rng(4);
  const Tensor x = random_tensor(rng, {2, 8}, -3, 3);
  const Tensor y = ops::layer_norm(x, Tensor::full({8}, 1.0),
                                   Tensor::zeros({8}));
  for (std::size_t r = 0; r < 2; ++r) {
    double m = 0, v = 0;
    for (std::size_t c = 0; c < 8; ++c) m += y.at(r, c) / 8;
    for (std::size_t c = 0; c < 8; ++c) v += (y.at(r, c) - m) * (y.at(r, c) - m) / 8;
    EXPECT_NEAR(m, 0.0, 1e-12);
    EXPECT_NEAR(v, 1.0, 1e-4);
  }
}

TEST(OpsTest, BilinearSampleInterpolatesAndPadsZero) {
  // 1 channel 2x2 map: values 0 1 / 2 3 at integer pixel centers.
  const Tensor map = Tensor::from({1, 2, 2}, {0, 1, 2, 3});
  const Tensor pts = Tensor::from({3, 2}, {0.5, 0.5, 0.0, 1.0, -1.0, 0.0});
  const Tensor s = ops::bilinear_sample(map, pts);
  EXPECT_DOUBLE_EQ(s[0], 1.5);
  EXPECT_DOUBLE_EQ(s[1], 2.0);
  EXPECT_DOUBLE_EQ(s[2], 0.0);
}

TEST(OpsTest, InverseSigmoidRoundTrip) {
  const Tensor x = Tensor::from({3}, {0.1, 0.5, 0.9});
  const Tensor y = ops::sigmoid(ops::inverse_sigmoid(x));
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(y[i], x[i], 1e-12);
}

TEST(OpsTest, FocalLossMatchesComposedForm) {
  Rng rng(7);
  const Tensor logits = random_tensor(rng, {4, 3}, -3, 3);
  const std::vector<double> t = {1, 0, 0, 0, 1, 1, 0, 0, 0, 1, 0, 1};
  const double fused = ops::sigmoid_focal_loss(logits, t, 0.25, 2.0).item();
  double manual = 0;
  for (std::size_t i = 0; i < 12; ++i) {
    const double p = 1 / (1 + std::exp(-logits[i]));
    manual += t[i] ? -0.25 * (1 - p) * (1 - p) * std::log(p)
                   : -0.75 * p * p * std::log(1 - p);
  }
  EXPECT_NEAR(fused, manual, 1e-12);
}

// Finite-difference checks of every differentiable op.
TEST(OpsGradTest, Elementwise) {
  Rng rng(11);
  Tensor a = random_tensor(rng, {3, 4}, 0.2, 2.0);
  Tensor b = random_tensor(rng, {4}, 0.5, 1.5);
  Tensor c = random_tensor(rng, {3, 4}, 0.2, 2.0);
  expect_grad_ok([&] { return ops::sum(ops::add(a, b)); }, {a, b});
  expect_grad_ok([&] { return ops::sum(ops::sub(a, b)); }, {a, b});
  expect_grad_ok([&] { return ops::sum(ops::mul(a, b)); }, {a, b});
  expect_grad_ok([&] { return ops::sum(ops::div(a, c)); }, {a, c});
  expect_grad_ok([&] { return ops::sum(ops::minimum(a, c)); }, {a, c});
  expect_grad_ok([&] { return ops::sum(ops::maximum(a, c)); }, {a, c});
  expect_grad_ok([&] { return ops::mean(ops::scale(a, -2.5)); }, {a});
  expect_grad_ok([&] { return ops::sum(ops::add_scalar(ops::neg(a), 3)); },
                 {a});
  expect_grad_ok([&] { return ops::sum(ops::sigmoid(a)); }, {a});
  expect_grad_ok([&] { return ops::sum(ops::exp(a)); }, {a});
  expect_grad_ok([&] { return ops::sum(ops::log(a)); }, {a});
  expect_grad_ok([&] { return ops::sum(ops::sin(a)); }, {a});
  Tensor s = random_tensor(rng, {6}, 0.05, 0.95);
  expect_grad_ok([&] { return ops::sum(ops::inverse_sigmoid(s)); }, {s});
  Tensor signed_t = Tensor::from({4}, {-1.3, 0.7, -0.2, 2.1}, true);
  expect_grad_ok([&] { return ops::sum(ops::abs(signed_t)); }, {signed_t});
  expect_grad_ok([&] { return ops::sum(ops::relu(signed_t)); }, {signed_t});
}

TEST(OpsGradTest, Structural) {
  Rng rng(12);
  Tensor a = random_tensor(rng, {2, 3, 4});
  Tensor w = random_tensor(rng, {4, 5});
  Tensor m = random_tensor(rng, {3, 4});
  Tensor weights = random_tensor(rng, {2, 5, 3});
  expect_grad_ok([&] { return ops::sum(ops::mul(ops::matmul(a, w), ops::matmul(a, w))); },
                 {a, w});
  expect_grad_ok([&] { return ops::sum(ops::sin(ops::matmul(m, ops::transpose(m)))); },
                 {m});
  expect_grad_ok([&] {
    return ops::sum(ops::sin(ops::matmul(weights, a)));
  }, {weights, a});
  const std::size_t order[] = {2, 0, 1};
  expect_grad_ok([&] {
    return ops::sum(ops::sin(ops::reshape(ops::permute(a, order), {4, 6})));
  }, {a});
  expect_grad_ok([&] { return ops::sum(ops::sin(ops::slice(a, 2, 1, 3))); },
                 {a});
  expect_grad_ok([&] {
    const Tensor parts[] = {m, ops::scale(m, 2.0)};
    return ops::sum(ops::sin(ops::concat(parts, 1)));
  }, {m});
  const std::size_t idx[] = {2, 0, 2};
  expect_grad_ok([&] { return ops::sum(ops::sin(ops::index_select(m, idx))); },
                 {m});
}

TEST(OpsGradTest, SoftmaxLayerNorm) {
  Rng rng(13);
  Tensor x = random_tensor(rng, {3, 5});
  Tensor g = random_tensor(rng, {5});
  Tensor b = random_tensor(rng, {5});
  expect_grad_ok([&] { return ops::sum(ops::sin(ops::softmax(x, 1))); }, {x},
                 1e-4);
  expect_grad_ok([&] { return ops::sum(ops::sin(ops::softmax(x, 0))); }, {x},
                 1e-4);
  expect_grad_ok([&] {
    return ops::sum(ops::sin(ops::layer_norm(x, g, b)));
  }, {x, g, b}, 1e-5);
}

TEST(OpsGradTest, BilinearSample) {
  Rng rng(14);
  Tensor map = random_tensor(rng, {2, 4, 5});
  // Points off the integer grid, some partly outside the map.
  Tensor pts = Tensor::from({4, 2}, {0.3, 0.6, 2.7, 1.2, -0.4, 3.3, 4.2, 2.9},
                            true);
  expect_grad_ok([&] { return ops::sum(ops::sin(ops::bilinear_sample(map, pts))); },
                 {map, pts});
}

TEST(OpsGradTest, FocalLoss) {
  Rng rng(15);
  Tensor logits = random_tensor(rng, {3, 4}, -4, 4);
  const std::vector<double> t = {1, 0, 0, 1, 0, 0, 0, 0, 1, 1, 0, 0};
  expect_grad_ok([&] { return ops::sigmoid_focal_loss(logits, t, 0.25, 2.0); },
                 {logits});
}

TEST(OpsExamplesTest, MatmulIdentityAndHandCase) {
  const Tensor eye = Tensor::from({2, 2}, {1, 0, 0, 1});
  const Tensor m = Tensor::from({2, 2}, {1, 2, 3, 4});
  const Tensor p = ops::matmul(eye, m);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(p[i], m[i]);
  const Tensor q = ops::matmul(Tensor::from({1, 2}, {1, 2}),
                               Tensor::from({2, 1}, {3, 4}));
  EXPECT_DOUBLE_EQ(q.item() , 11.0);
}

TEST(OpsExamplesTest, MatmulSumGradientIsRowSums) {
  Rng rng(21);
  Tensor a = random_tensor(rng, {3, 4});
  const Tensor b = random_tensor(rng, {4, 2});
  backward(ops::sum(ops::matmul(a, b)));
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t k = 0; k < 4; ++k) {
      EXPECT_NEAR(a.grad()[i * 4 + k], b.at(k, 0) + b.at(k, 1), 1e-15);
    }
  }
}

TEST(OpsExamplesTest, SoftmaxClosedForms) {
  const Tensor u = ops::softmax(Tensor::from({3}, {0, 0, 0}), 0);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(u[i], 1.0 / 3, 1e-15);
  const Tensor l = ops::softmax(
      Tensor::from({3}, {std::log(1.0), std::log(2.0), std::log(3.0)}), 0);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(l[i], (i + 1) / 6.0, 1e-15);
  Rng rng(22);
  const Tensor x = random_tensor(rng, {2, 6}, -5, 5);
  const Tensor shifted = ops::softmax(ops::add_scalar(x, 37.5), 1);
  const Tensor base = ops::softmax(x, 1);
  for (std::size_t i = 0; i < 12; ++i) EXPECT_NEAR(shifted[i], base[i], 1e-12);
}

TEST(OpsExamplesTest, LayerNormExamples) {
  const Tensor one = Tensor::full({3}, 1.0), zero = Tensor::zeros({3});
  const Tensor c = ops::layer_norm(Tensor::from({1, 3}, {5, 5, 5}), one, zero);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(c[i], 0.0);
  const Tensor two = ops::layer_norm(Tensor::from({1, 2}, {1, 3}),
                                     Tensor::full({2}, 1.0),
                                     Tensor::zeros({2}), 1e-12);
  EXPECT_NEAR(two[0], -1.0, 1e-9);
  EXPECT_NEAR(two[1], 1.0, 1e-9);
  Rng rng(23);
  const Tensor x = random_tensor(rng, {4, 8}, -10, 10);
  const Tensor y = ops::layer_norm(x, Tensor::full({8}, 1.0),
                                   Tensor::zeros({8}));
  for (std::size_t r = 0; r < 4; ++r) {
    double m = 0;
    for (std::size_t k = 0; k < 8; ++k) m += y.at(r, k);
    EXPECT_LE(std::abs(m / 8), 1e-10);
  }
}

TEST(OpsExamplesTest, BilinearGridPointsAreExact) {
  Rng rng(24);
  const Tensor map = random_tensor(rng, {2, 3, 4});
  for (std::size_t y = 0; y < 3; ++y) {
    for (std::size_t x = 0; x < 4; ++x) {
      const Tensor pt = Tensor::from({1, 2}, {double(x), double(y)});
      const Tensor v = ops::bilinear_sample(map, pt);
      EXPECT_EQ(v[0], map[(0 * 3 + y) * 4 + x]);
      EXPECT_EQ(v[1], map[(1 * 3 + y) * 4 + x]);
    }
  }
  const Tensor far = ops::bilinear_sample(map, Tensor::from({1, 2}, {-5, -5}));
  EXPECT_EQ(far[0], 0.0);
}

TEST(OpsExamplesTest, BackwardSimpleCases) {
  Tensor x = Tensor::from({2, 2}, {1, -2, 3, 0.5}, true);
  backward(ops::sum(x));
  for (double g : x.grad()) EXPECT_EQ(g, 1.0);
  Tensor y = Tensor::from({3}, {1, 2, 3}, true);
  backward(ops::sum(ops::mul(y, y)));
  EXPECT_EQ(y.grad()[0], 2.0);
  EXPECT_EQ(y.grad()[1], 4.0);
  EXPECT_EQ(y.grad()[2], 6.0);
}

// Composite covering the differentiable op set, re-drawn for 100 seeds.
TEST(OpsGradProperty, HundredSeeds) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(1000 + seed);
    Tensor a = random_tensor(rng, {3, 4});
    Tensor w = random_tensor(rng, {4, 4});
    Tensor g = random_tensor(rng, {4}, 0.5, 1.5);
    Tensor b = random_tensor(rng, {4});
    Tensor map = random_tensor(rng, {2, 3, 3});
    Tensor pts = random_tensor(rng, {3, 2}, -0.7, 2.7);
    auto f = [&] {
      const Tensor h = ops::layer_norm(ops::matmul(a, w), g, b);
      const Tensor s = ops::softmax(h, 1);
      const Tensor t = ops::mul(ops::sigmoid(h), ops::exp(ops::scale(s, 0.5)));
      const Tensor smp = ops::bilinear_sample(map, pts);
      return ops::add(ops::mean(ops::sin(t)), ops::sum(ops::mul(smp, smp)));
    };
    const auto r = grad_check(f, {a, w, g, b, map, pts}, 1e-6, 1e-6);
    ASSERT_LE(r.max_rel_error, 1e-4) << "seed " << seed;
  }
}

}  // namespace
}  // namespace mmgd
