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

#ifndef MMGD_TENSOR_H_
#define MMGD_TENSOR_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace mmgd {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_string(const Shape& shape);

namespace internal {

// One vertex of the autodiff graph. Ops that consume a grad-requiring input
// record their inputs and a backward rule; leaves have neither.
struct Node {
  Shape shape;
  std::vector<double> data;
  // Empty means "no gradient yet".
  std::vector<double> grad;
  bool requires_grad = false;
  const char* op = "leaf";
  std::vector<std::shared_ptr<Node>> inputs;
  // Reads this node's grad and accumulates into inputs' grads.
  std::function<void(Node&)> backward;

  std::vector<double>& ensure_grad() {
    if (grad.empty()) grad.assign(data.size(), 0.0);
    return grad;
  }
};

}  // namespace internal

// Dense row-major float64 tensor. Copies share the underlying storage, like a
// reference-counted handle; use clone() for an independent value.
class Tensor {
 public:
  Tensor();

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<double> data,
                     bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t dim(std::size_t axis) const { return node_->shape.at(axis); }
  std::size_t numel() const { return node_->data.size(); }

  std::span<const double> data() const { return node_->data; }
  // Mutating a tensor that already participates in a recorded graph
  // invalidates that graph; intended for parameters and inputs.
  std::span<double> mutable_data() { return node_->data; }
  double item() const;
  double operator[](std::size_t i) const { return node_->data[i]; }
  double at(std::size_t row, std::size_t col) const;

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool value) { node_->requires_grad = value; }
  bool is_leaf() const { return node_->inputs.empty(); }
  const char* op_name() const { return node_->op; }

  bool has_grad() const { return !node_->grad.empty(); }
  std::span<const double> grad() const { return node_->grad; }
  void zero_grad() { node_->grad.clear(); }

  // Same values, no graph history.
  Tensor detach() const;
  Tensor clone() const;

  bool same_storage(const Tensor& other) const { return node_ == other.node_; }

  // Internal: used by ops to build the graph.
  explicit Tensor(std::shared_ptr<internal::Node> node)
      : node_(std::move(node)) {}
  const std::shared_ptr<internal::Node>& node() const { return node_; }

 private:
  std::shared_ptr<internal::Node> node_;
};

// Topologically ordered record of the graph reachable from a root. Built on
// demand from the recorded inputs; every node appears after all its inputs.
class Tape {
 public:
  explicit Tape(const Tensor& root, std::uint64_t seed = 0);

  const std::vector<internal::Node*>& nodes() const { return order_; }
  std::uint64_t seed() const { return seed_; }

  // Reverse-mode sweep. Leaf gradients accumulate across calls; interior
  // gradients are released after use.
  void backward();

 private:
  Tensor root_;
  std::vector<internal::Node*> order_;
  std::uint64_t seed_;
};

// Populates grad on every requires_grad leaf reachable from the scalar loss.
// Throws ConfigError when loss is not a scalar.
void backward(const Tensor& loss);

}  // namespace mmgd

#endif  // MMGD_TENSOR_H_
