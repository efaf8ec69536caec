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

#include "mmgd/ops.h"

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <string>
#include <utility>

#include "mmgd/error.h"

namespace mmgd::ops {
namespace {

using internal::Node;

void check_finite(const char* op, const std::vector<double>& values) {
  for (double v : values) {
    if (!std::isfinite(v)) {
      throw NumericError(std::string("non-finite value produced by ") + op);
    }
  }
}

// Builds the output tensor and, when any input needs gradients, wires the
// backward rule into the graph.
Tensor make(const char* op, Shape shape, std::vector<double> data,
            std::initializer_list<const Tensor*> inputs,
            std::function<void(Node&)> backward) {
  check_finite(op, data);
  auto node = std::make_shared<Node>();
  node->op = op;
  node->shape = std::move(shape);
  node->data = std::move(data);
  bool needs_grad = false;
  for (const Tensor* t : inputs) needs_grad = needs_grad || t->requires_grad();
  if (needs_grad) {
    node->requires_grad = true;
    for (const Tensor* t : inputs) node->inputs.push_back(t->node());
    node->backward = std::move(backward);
  }
  return Tensor(std::move(node));
}

Tensor make_n(const char* op, Shape shape, std::vector<double> data,
              std::span<const Tensor> inputs,
              std::function<void(Node&)> backward) {
  check_finite(op, data);
  auto node = std::make_shared<Node>();
  node->op = op;
  node->shape = std::move(shape);
  node->data = std::move(data);
  bool needs_grad = false;
  for (const Tensor& t : inputs) needs_grad = needs_grad || t.requires_grad();
  if (needs_grad) {
    node->requires_grad = true;
    for (const Tensor& t : inputs) node->inputs.push_back(t.node());
    node->backward = std::move(backward);
  }
  return Tensor(std::move(node));
}

// Gradient buffer of input `i`, or nullptr when it does not want one.
std::vector<double>* grad_of(Node& out, std::size_t i) {
  Node& in = *out.inputs[i];
  if (!in.requires_grad) return nullptr;
  return &in.ensure_grad();
}

// Number of elements of `b` when it broadcasts as a suffix of `a`.
std::size_t broadcast_inner(const char* op, const Tensor& a, const Tensor& b) {
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  bool ok = sb.size() <= sa.size() &&
            std::equal(sb.begin(), sb.end(), sa.end() - sb.size());
  if (!ok) {
    throw ShapeError(std::string(op) + ": shapes " + shape_string(sa) +
                     " and " + shape_string(sb) + " are not broadcastable");
  }
  return std::max<std::size_t>(b.numel(), 1);
}

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " +
                     shape_string(a.shape()) + " vs " +
                     shape_string(b.shape()));
  }
}

template <typename Fwd, typename Bwd>
Tensor unary(const char* op, const Tensor& a, Fwd fwd, Bwd dfdx) {
  std::vector<double> out(a.numel());
  auto x = a.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(x[i]);
  return make(op, a.shape(), std::move(out), {&a}, [dfdx](Node& n) {
    if (auto* g = grad_of(n, 0)) {
      const auto& x = n.inputs[0]->data;
      for (std::size_t i = 0; i < n.grad.size(); ++i) {
        (*g)[i] += n.grad[i] * dfdx(x[i], n.data[i]);
      }
    }
  });
}

double softplus(double x) {
  return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double sigmoid_scalar(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

std::size_t prod(const Shape& s, std::size_t begin, std::size_t end) {
  std::size_t n = 1;
  for (std::size_t i = begin; i < end; ++i) n *= s[i];
  return n;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  const std::size_t inner = broadcast_inner("add", a, b);
  std::vector<double> out(a.numel());
  auto x = a.data();
  auto y = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] + y[i % inner];
  return make("add", a.shape(), std::move(out), {&a, &b}, [inner](Node& n) {
    if (auto* ga = grad_of(n, 0)) {
      for (std::size_t i = 0; i < n.grad.size(); ++i) (*ga)[i] += n.grad[i];
    }
    if (auto* gb = grad_of(n, 1)) {
      for (std::size_t i = 0; i < n.grad.size(); ++i) {
        (*gb)[i % inner] += n.grad[i];
      }
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  const std::size_t inner = broadcast_inner("sub", a, b);
  std::vector<double> out(a.numel());
  auto x = a.data();
  auto y = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] - y[i % inner];
  return make("sub", a.shape(), std::move(out), {&a, &b}, [inner](Node& n) {
    if (auto* ga = grad_of(n, 0)) {
      for (std::size_t i = 0; i < n.grad.size(); ++i) (*ga)[i] += n.grad[i];
    }
    if (auto* gb = grad_of(n, 1)) {
      for (std::size_t i = 0; i < n.grad.size(); ++i) {
        (*gb)[i % inner] -= n.grad[i];
      }
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  const std::size_t inner = broadcast_inner("mul", a, b);
  std::vector<double> out(a.numel());
  auto x = a.data();
  auto y = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] * y[i % inner];
  return make("mul", a.shape(), std::move(out), {&a, &b}, [inner](Node& n) {
    const auto& x = n.inputs[0]->data;
    const auto& y = n.inputs[1]->data;
    if (auto* ga = grad_of(n, 0)) {
      for (std::size_t i = 0; i < n.grad.size(); ++i) {
        (*ga)[i] += n.grad[i] * y[i % inner];
      }
    }
    if (auto* gb = grad_of(n, 1)) {
      for (std::size_t i = 0; i < n.grad.size(); ++i) {
        (*gb)[i % inner] += n.grad[i] * x[i];
      }
    }
  });
}

Tensor div(const Tensor& a, const Tensor& b) {
  require_same_shape("div", a, b);
  std::vector<double> out(a.numel());
  auto x = a.data();
  auto y = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] / y[i];
  return make("div", a.shape(), std::move(out), {&a, &b}, [](Node& n) {
    const auto& y = n.inputs[1]->data;
    if (auto* ga = grad_of(n, 0)) {
      for (std::size_t i = 0; i < n.grad.size(); ++i) {
        (*ga)[i] += n.grad[i] / y[i];
      }
    }
    if (auto* gb = grad_of(n, 1)) {
      for (std::size_t i = 0; i < n.grad.size(); ++i) {
        (*gb)[i] -= n.grad[i] * n.data[i] / y[i];
      }
    }
  });
}

namespace {

Tensor select_binary(const char* op, const Tensor& a, const Tensor& b,
                     bool take_min) {
  require_same_shape(op, a, b);
  std::vector<double> out(a.numel());
  auto x = a.data();
  auto y = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = take_min ? std::min(x[i], y[i]) : std::max(x[i], y[i]);
  }
  // Ties route the gradient to `a`.
  return make(op, a.shape(), std::move(out), {&a, &b}, [take_min](Node& n) {
    const auto& x = n.inputs[0]->data;
    const auto& y = n.inputs[1]->data;
    auto* ga = grad_of(n, 0);
    auto* gb = grad_of(n, 1);
    for (std::size_t i = 0; i < n.grad.size(); ++i) {
      const bool pick_a = take_min ? x[i] <= y[i] : x[i] >= y[i];
      if (pick_a) {
        if (ga) (*ga)[i] += n.grad[i];
      } else if (gb) {
        (*gb)[i] += n.grad[i];
      }
    }
  });
}

}  // namespace

Tensor minimum(const Tensor& a, const Tensor& b) {
  return select_binary("minimum", a, b, true);
}

Tensor maximum(const Tensor& a, const Tensor& b) {
  return select_binary("maximum", a, b, false);
}

Tensor scale(const Tensor& a, double factor) {
  return unary(
      "scale", a, [factor](double x) { return x * factor; },
      [factor](double, double) { return factor; });
}

Tensor add_scalar(const Tensor& a, double value) {
  return unary(
      "add_scalar", a, [value](double x) { return x + value; },
      [](double, double) { return 1.0; });
}

Tensor neg(const Tensor& a) { return scale(a, -1.0); }

Tensor relu(const Tensor& a) {
  return unary(
      "relu", a, [](double x) { return x > 0 ? x : 0.0; },
      [](double x, double) { return x > 0 ? 1.0 : 0.0; });
}

Tensor sigmoid(const Tensor& a) {
  return unary("sigmoid", a, sigmoid_scalar,
               [](double, double y) { return y * (1.0 - y); });
}

Tensor exp(const Tensor& a) {
  return unary(
      "exp", a, [](double x) { return std::exp(x); },
      [](double, double y) { return y; });
}

Tensor log(const Tensor& a) {
  return unary(
      "log", a, [](double x) { return std::log(x); },
      [](double x, double) { return 1.0 / x; });
}

Tensor abs(const Tensor& a) {
  return unary(
      "abs", a, [](double x) { return std::abs(x); },
      [](double x, double) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); });
}

Tensor sin(const Tensor& a) {
  return unary(
      "sin", a, [](double x) { return std::sin(x); },
      [](double x, double) { return std::cos(x); });
}

Tensor inverse_sigmoid(const Tensor& a, double eps) {
  return unary(
      "inverse_sigmoid", a,
      [eps](double x) {
        const double c = std::clamp(x, eps, 1.0 - eps);
        return std::log(c / (1.0 - c));
      },
      [eps](double x, double) {
        if (x <= eps || x >= 1.0 - eps) return 0.0;
        return 1.0 / (x * (1.0 - x));
      });
}

Tensor sum(const Tensor& a) {
  double total = 0.0;
  for (double v : a.data()) total += v;
  return make("sum", {}, {total}, {&a}, [](Node& n) {
    if (auto* g = grad_of(n, 0)) {
      for (double& v : *g) v += n.grad[0];
    }
  });
}

Tensor mean(const Tensor& a) {
  if (a.numel() == 0) throw ShapeError("mean of an empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(a.numel()));
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  auto mismatch = [&] {
    return ShapeError("matmul: incompatible shapes " + shape_string(sa) +
                      " and " + shape_string(sb));
  };
  if (sa.size() < 2 || sb.size() < 2) throw mismatch();
  const std::size_t m = sa[sa.size() - 2];
  const std::size_t k = sa.back();
  const std::size_t k2 = sb[sb.size() - 2];
  const std::size_t n = sb.back();
  if (k != k2) throw mismatch();
  const Shape batch_a(sa.begin(), sa.end() - 2);
  const Shape batch_b(sb.begin(), sb.end() - 2);
  Shape out_shape;
  if (batch_a == batch_b || batch_b.empty()) {
    out_shape = batch_a;
  } else if (batch_a.empty()) {
    out_shape = batch_b;
  } else {
    throw mismatch();
  }
  const std::size_t batches = shape_numel(out_shape);
  const std::size_t stride_a = batch_a.empty() ? 0 : m * k;
  const std::size_t stride_b = batch_b.empty() ? 0 : k * n;
  out_shape.push_back(m);
  out_shape.push_back(n);

  std::vector<double> out(batches * m * n, 0.0);
  auto x = a.data();
  auto y = b.data();
  for (std::size_t bi = 0; bi < batches; ++bi) {
    const double* pa = x.data() + bi * stride_a;
    const double* pb = y.data() + bi * stride_b;
    double* po = out.data() + bi * m * n;
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t p = 0; p < k; ++p) {
        const double av = pa[i * k + p];
        if (av == 0.0) continue;
        const double* row_b = pb + p * n;
        double* row_o = po + i * n;
        for (std::size_t j = 0; j < n; ++j) row_o[j] += av * row_b[j];
      }
    }
  }
  return make("matmul", std::move(out_shape), std::move(out), {&a, &b},
              [=](Node& node) {
                const auto& x = node.inputs[0]->data;
                const auto& y = node.inputs[1]->data;
                auto* ga = grad_of(node, 0);
                auto* gb = grad_of(node, 1);
                for (std::size_t bi = 0; bi < batches; ++bi) {
                  const double* g = node.grad.data() + bi * m * n;
                  const double* pa = x.data() + bi * stride_a;
                  const double* pb = y.data() + bi * stride_b;
                  if (ga) {
                    double* da = ga->data() + bi * stride_a;
                    for (std::size_t i = 0; i < m; ++i) {
                      for (std::size_t p = 0; p < k; ++p) {
                        double acc = 0.0;
                        for (std::size_t j = 0; j < n; ++j) {
                          acc += g[i * n + j] * pb[p * n + j];
                        }
                        da[i * k + p] += acc;
                      }
                    }
                  }
                  if (gb) {
                    double* db = gb->data() + bi * stride_b;
                    for (std::size_t i = 0; i < m; ++i) {
                      for (std::size_t p = 0; p < k; ++p) {
                        const double av = pa[i * k + p];
                        if (av == 0.0) continue;
                        for (std::size_t j = 0; j < n; ++j) {
                          db[p * n + j] += av * g[i * n + j];
                        }
                      }
                    }
                  }
                }
              });
}

Tensor permute(const Tensor& a, std::span<const std::size_t> order) {
  const Shape& s = a.shape();
  const std::size_t r = s.size();
  if (order.size() != r) {
    throw ShapeError("permute: order length does not match rank of " +
                     shape_string(s));
  }
  std::vector<bool> seen(r, false);
  for (std::size_t o : order) {
    if (o >= r || seen[o]) throw ShapeError("permute: invalid axis order");
    seen[o] = true;
  }
  Shape out_shape(r);
  for (std::size_t i = 0; i < r; ++i) out_shape[i] = s[order[i]];
  std::vector<std::size_t> in_strides(r, 1);
  for (std::size_t i = r; i-- > 1;) in_strides[i - 1] = in_strides[i] * s[i];

  const std::size_t total = a.numel();
  auto source = std::make_shared<std::vector<std::size_t>>(total);
  std::vector<std::size_t> idx(r, 0);
  for (std::size_t lin = 0; lin < total; ++lin) {
    std::size_t off = 0;
    for (std::size_t i = 0; i < r; ++i) off += idx[i] * in_strides[order[i]];
    (*source)[lin] = off;
    for (std::size_t i = r; i-- > 0;) {
      if (++idx[i] < out_shape[i]) break;
      idx[i] = 0;
    }
  }
  std::vector<double> out(total);
  auto x = a.data();
  for (std::size_t i = 0; i < total; ++i) out[i] = x[(*source)[i]];
  return make("permute", std::move(out_shape), std::move(out), {&a},
              [source](Node& n) {
                if (auto* g = grad_of(n, 0)) {
                  for (std::size_t i = 0; i < n.grad.size(); ++i) {
                    (*g)[(*source)[i]] += n.grad[i];
                  }
                }
              });
}

Tensor transpose(const Tensor& a) {
  const std::size_t r = a.rank();
  if (r < 2) throw ShapeError("transpose requires rank >= 2");
  std::vector<std::size_t> order(r);
  for (std::size_t i = 0; i < r; ++i) order[i] = i;
  std::swap(order[r - 1], order[r - 2]);
  return permute(a, order);
}

Tensor reshape(const Tensor& a, Shape shape) {
  if (shape_numel(shape) != a.numel()) {
    throw ShapeError("reshape: cannot view " + shape_string(a.shape()) +
                     " as " + shape_string(shape));
  }
  std::vector<double> out(a.data().begin(), a.data().end());
  return make("reshape", std::move(shape), std::move(out), {&a}, [](Node& n) {
    if (auto* g = grad_of(n, 0)) {
      for (std::size_t i = 0; i < n.grad.size(); ++i) (*g)[i] += n.grad[i];
    }
  });
}

Tensor slice(const Tensor& a, std::size_t axis, std::size_t begin,
             std::size_t end) {
  const Shape& s = a.shape();
  if (axis >= s.size() || begin > end || end > s[axis]) {
    throw ShapeError("slice: range [" + std::to_string(begin) + ", " +
                     std::to_string(end) + ") on axis " +
                     std::to_string(axis) + " out of bounds for " +
                     shape_string(s));
  }
  const std::size_t outer = prod(s, 0, axis);
  const std::size_t inner = prod(s, axis + 1, s.size());
  const std::size_t len = end - begin;
  Shape out_shape = s;
  out_shape[axis] = len;
  std::vector<double> out(outer * len * inner);
  auto x = a.data();
  const std::size_t in_axis = s[axis];
  for (std::size_t o = 0; o < outer; ++o) {
    std::copy_n(x.data() + (o * in_axis + begin) * inner, len * inner,
                out.data() + o * len * inner);
  }
  return make("slice", std::move(out_shape), std::move(out), {&a},
              [=](Node& n) {
                if (auto* g = grad_of(n, 0)) {
                  for (std::size_t o = 0; o < outer; ++o) {
                    const double* src = n.grad.data() + o * len * inner;
                    double* dst = g->data() + (o * in_axis + begin) * inner;
                    for (std::size_t i = 0; i < len * inner; ++i) {
                      dst[i] += src[i];
                    }
                  }
                }
              });
}

Tensor concat(std::span<const Tensor> parts, std::size_t axis) {
  if (parts.empty()) throw ShapeError("concat of zero tensors");
  const Shape& s0 = parts[0].shape();
  if (axis >= s0.size()) throw ShapeError("concat: axis out of range");
  std::vector<std::size_t> extents;
  std::size_t total_axis = 0;
  for (const Tensor& p : parts) {
    const Shape& s = p.shape();
    bool ok = s.size() == s0.size();
    for (std::size_t i = 0; ok && i < s.size(); ++i) {
      ok = i == axis || s[i] == s0[i];
    }
    if (!ok) {
      throw ShapeError("concat: shape " + shape_string(s) +
                       " incompatible with " + shape_string(s0));
    }
    extents.push_back(s[axis]);
    total_axis += s[axis];
  }
  const std::size_t outer = prod(s0, 0, axis);
  const std::size_t inner = prod(s0, axis + 1, s0.size());
  Shape out_shape = s0;
  out_shape[axis] = total_axis;
  std::vector<double> out(outer * total_axis * inner);
  std::size_t offset = 0;
  for (std::size_t pi = 0; pi < parts.size(); ++pi) {
    auto x = parts[pi].data();
    const std::size_t len = extents[pi];
    for (std::size_t o = 0; o < outer; ++o) {
      std::copy_n(x.data() + o * len * inner, len * inner,
                  out.data() + (o * total_axis + offset) * inner);
    }
    offset += len;
  }
  return make_n("concat", std::move(out_shape), std::move(out), parts,
                [=](Node& n) {
                  std::size_t offset = 0;
                  for (std::size_t pi = 0; pi < extents.size(); ++pi) {
                    const std::size_t len = extents[pi];
                    if (auto* g = grad_of(n, pi)) {
                      for (std::size_t o = 0; o < outer; ++o) {
                        const double* src =
                            n.grad.data() + (o * total_axis + offset) * inner;
                        double* dst = g->data() + o * len * inner;
                        for (std::size_t i = 0; i < len * inner; ++i) {
                          dst[i] += src[i];
                        }
                      }
                    }
                    offset += len;
                  }
                });
}

Tensor index_select(const Tensor& a, std::span<const std::size_t> indices) {
  const Shape& s = a.shape();
  if (s.empty()) throw ShapeError("index_select on a scalar");
  const std::size_t row = prod(s, 1, s.size());
  for (std::size_t idx : indices) {
    if (idx >= s[0]) {
      throw ShapeError("index_select: index " + std::to_string(idx) +
                       " out of range for " + shape_string(s));
    }
  }
  Shape out_shape = s;
  out_shape[0] = indices.size();
  std::vector<double> out(indices.size() * row);
  auto x = a.data();
  for (std::size_t i = 0; i < indices.size(); ++i) {
    std::copy_n(x.data() + indices[i] * row, row, out.data() + i * row);
  }
  std::vector<std::size_t> idx(indices.begin(), indices.end());
  return make("index_select", std::move(out_shape), std::move(out), {&a},
              [idx = std::move(idx), row](Node& n) {
                if (auto* g = grad_of(n, 0)) {
                  for (std::size_t i = 0; i < idx.size(); ++i) {
                    for (std::size_t j = 0; j < row; ++j) {
                      (*g)[idx[i] * row + j] += n.grad[i * row + j];
                    }
                  }
                }
              });
}

Tensor softmax(const Tensor& x, std::size_t axis) {
  const Shape& s = x.shape();
  if (axis >= s.size()) {
    throw ShapeError("softmax: axis " + std::to_string(axis) +
                     " invalid for shape " + shape_string(s));
  }
  const std::size_t outer = prod(s, 0, axis);
  const std::size_t len = s[axis];
  const std::size_t inner = prod(s, axis + 1, s.size());
  std::vector<double> out(x.numel());
  auto in = x.data();
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t i = 0; i < inner; ++i) {
      const std::size_t base = o * len * inner + i;
      double mx = in[base];
      for (std::size_t k = 1; k < len; ++k) {
        mx = std::max(mx, in[base + k * inner]);
      }
      double total = 0.0;
      for (std::size_t k = 0; k < len; ++k) {
        const double e = std::exp(in[base + k * inner] - mx);
        out[base + k * inner] = e;
        total += e;
      }
      for (std::size_t k = 0; k < len; ++k) out[base + k * inner] /= total;
    }
  }
  return make("softmax", s, std::move(out), {&x}, [=](Node& n) {
    if (auto* g = grad_of(n, 0)) {
      for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t i = 0; i < inner; ++i) {
          const std::size_t base = o * len * inner + i;
          double dot = 0.0;
          for (std::size_t k = 0; k < len; ++k) {
            dot += n.grad[base + k * inner] * n.data[base + k * inner];
          }
          for (std::size_t k = 0; k < len; ++k) {
            const std::size_t at = base + k * inner;
            (*g)[at] += n.data[at] * (n.grad[at] - dot);
          }
        }
      }
    }
  });
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                  double eps) {
  if (x.rank() == 0) throw ShapeError("layer_norm on a scalar");
  const std::size_t d = x.shape().back();
  if (gamma.numel() != d || beta.numel() != d) {
    throw ShapeError("layer_norm: gamma/beta extent does not match " +
                     shape_string(x.shape()));
  }
  if (!(eps > 0)) throw ConfigError("layer_norm: eps must be positive");
  const std::size_t rows = x.numel() / d;
  auto in = x.data();
  auto gm = gamma.data();
  auto bt = beta.data();
  auto xhat = std::make_shared<std::vector<double>>(x.numel());
  auto inv_std = std::make_shared<std::vector<double>>(rows);
  std::vector<double> out(x.numel());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = in.data() + r * d;
    double mu = 0.0;
    for (std::size_t j = 0; j < d; ++j) mu += row[j];
    mu /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t j = 0; j < d; ++j) var += (row[j] - mu) * (row[j] - mu);
    var /= static_cast<double>(d);
    const double is = 1.0 / std::sqrt(var + eps);
    (*inv_std)[r] = is;
    for (std::size_t j = 0; j < d; ++j) {
      const double h = (row[j] - mu) * is;
      (*xhat)[r * d + j] = h;
      out[r * d + j] = h * gm[j] + bt[j];
    }
  }
  return make("layer_norm", x.shape(), std::move(out), {&x, &gamma, &beta},
              [=](Node& n) {
                const auto& gm = n.inputs[1]->data;
                auto* gx = grad_of(n, 0);
                auto* gg = grad_of(n, 1);
                auto* gb = grad_of(n, 2);
                const double inv_d = 1.0 / static_cast<double>(d);
                for (std::size_t r = 0; r < rows; ++r) {
                  const double* g = n.grad.data() + r * d;
                  const double* h = xhat->data() + r * d;
                  if (gg || gb) {
                    for (std::size_t j = 0; j < d; ++j) {
                      if (gg) (*gg)[j] += g[j] * h[j];
                      if (gb) (*gb)[j] += g[j];
                    }
                  }
                  if (gx) {
                    double mean_gh = 0.0;
                    double mean_ghh = 0.0;
                    for (std::size_t j = 0; j < d; ++j) {
                      const double gh = g[j] * gm[j];
                      mean_gh += gh;
                      mean_ghh += gh * h[j];
                    }
                    mean_gh *= inv_d;
                    mean_ghh *= inv_d;
                    for (std::size_t j = 0; j < d; ++j) {
                      const double gh = g[j] * gm[j];
                      (*gx)[r * d + j] +=
                          (*inv_std)[r] * (gh - mean_gh - h[j] * mean_ghh);
                    }
                  }
                }
              });
}

Tensor bilinear_sample(const Tensor& feature_map, const Tensor& points) {
  const Shape& fs = feature_map.shape();
  const Shape& ps = points.shape();
  if (fs.size() != 3 || ps.size() != 2 || ps[1] != 2) {
    throw ShapeError("bilinear_sample: expected [C,H,W] map and [n,2] points, "
                     "got " + shape_string(fs) + " and " + shape_string(ps));
  }
  const std::size_t channels = fs[0];
  const long height = static_cast<long>(fs[1]);
  const long width = static_cast<long>(fs[2]);
  const std::size_t count = ps[0];
  auto fm = feature_map.data();
  auto pt = points.data();
  const std::size_t plane = static_cast<std::size_t>(height * width);

  auto value = [&](std::span<const double> map, std::size_t c, long y,
                   long x) -> double {
    if (x < 0 || y < 0 || x >= width || y >= height) return 0.0;
    return map[c * plane + static_cast<std::size_t>(y * width + x)];
  };

  std::vector<double> out(channels * count);
  for (std::size_t p = 0; p < count; ++p) {
    const double x = pt[2 * p];
    const double y = pt[2 * p + 1];
    const double xf = std::floor(x);
    const double yf = std::floor(y);
    const long x0 = static_cast<long>(xf);
    const long y0 = static_cast<long>(yf);
    const double fx = x - xf;
    const double fy = y - yf;
    for (std::size_t c = 0; c < channels; ++c) {
      out[c * count + p] = (1 - fy) * ((1 - fx) * value(fm, c, y0, x0) +
                                       fx * value(fm, c, y0, x0 + 1)) +
                           fy * ((1 - fx) * value(fm, c, y0 + 1, x0) +
                                 fx * value(fm, c, y0 + 1, x0 + 1));
    }
  }
  return make(
      "bilinear_sample", {channels, count}, std::move(out),
      {&feature_map, &points}, [=](Node& n) {
        const auto& map = n.inputs[0]->data;
        const auto& pts = n.inputs[1]->data;
        auto* gmap = grad_of(n, 0);
        auto* gpts = grad_of(n, 1);
        std::span<const double> mview(map);
        auto val = [&](std::size_t c, long y, long x) -> double {
          if (x < 0 || y < 0 || x >= width || y >= height) return 0.0;
          return mview[c * plane + static_cast<std::size_t>(y * width + x)];
        };
        auto scatter = [&](std::size_t c, long y, long x, double v) {
          if (x < 0 || y < 0 || x >= width || y >= height) return;
          (*gmap)[c * plane + static_cast<std::size_t>(y * width + x)] += v;
        };
        for (std::size_t p = 0; p < count; ++p) {
          const double x = pts[2 * p];
          const double y = pts[2 * p + 1];
          const double xf = std::floor(x);
          const double yf = std::floor(y);
          const long x0 = static_cast<long>(xf);
          const long y0 = static_cast<long>(yf);
          const double fx = x - xf;
          const double fy = y - yf;
          double dx = 0.0;
          double dy = 0.0;
          for (std::size_t c = 0; c < channels; ++c) {
            const double g = n.grad[c * count + p];
            if (g == 0.0) continue;
            if (gmap) {
              scatter(c, y0, x0, g * (1 - fy) * (1 - fx));
              scatter(c, y0, x0 + 1, g * (1 - fy) * fx);
              scatter(c, y0 + 1, x0, g * fy * (1 - fx));
              scatter(c, y0 + 1, x0 + 1, g * fy * fx);
            }
            if (gpts) {
              const double v00 = val(c, y0, x0);
              const double v01 = val(c, y0, x0 + 1);
              const double v10 = val(c, y0 + 1, x0);
              const double v11 = val(c, y0 + 1, x0 + 1);
              dx += g * ((1 - fy) * (v01 - v00) + fy * (v11 - v10));
              dy += g * ((1 - fx) * (v10 - v00) + fx * (v11 - v01));
            }
          }
          if (gpts) {
            (*gpts)[2 * p] += dx;
            (*gpts)[2 * p + 1] += dy;
          }
        }
      });
}

Tensor sigmoid_focal_loss(const Tensor& logits, std::span<const double> targets,
                          double alpha, double gamma) {
  if (targets.size() != logits.numel()) {
    throw ShapeError("sigmoid_focal_loss: " + std::to_string(targets.size()) +
                     " targets for logits of shape " +
                     shape_string(logits.shape()));
  }
  auto x = logits.data();
  auto grad_cells = std::make_shared<std::vector<double>>(x.size());
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double p = sigmoid_scalar(x[i]);
    const double log_p = -softplus(-x[i]);
    const double log_1mp = -softplus(x[i]);
    if (targets[i] > 0.5) {
      const double w = std::pow(1.0 - p, gamma);
      total += -alpha * w * log_p;
      (*grad_cells)[i] = alpha * w * (gamma * p * log_p - (1.0 - p));
    } else {
      const double w = std::pow(p, gamma);
      total += -(1.0 - alpha) * w * log_1mp;
      (*grad_cells)[i] = (1.0 - alpha) * w * (p - gamma * (1.0 - p) * log_1mp);
    }
  }
  return make("sigmoid_focal_loss", {}, {total}, {&logits},
              [grad_cells](Node& n) {
                if (auto* g = grad_of(n, 0)) {
                  for (std::size_t i = 0; i < g->size(); ++i) {
                    (*g)[i] += n.grad[0] * (*grad_cells)[i];
                  }
                }
              });
}

}  // namespace mmgd::ops
