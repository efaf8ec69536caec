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

#include "mmgd/tensor.h"

#include <sstream>
#include <unordered_set>
#include <utility>

#include "mmgd/error.h"

namespace mmgd {

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << "]";
  return os.str();
}

Tensor::Tensor() : node_(std::make_shared<internal::Node>()) {
  node_->shape = {};
  node_->data = {0.0};
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  auto node = std::make_shared<internal::Node>();
  node->data.assign(shape_numel(shape), value);
  node->shape = std::move(shape);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::from(Shape shape, std::vector<double> data,
                    bool requires_grad) {
  if (shape_numel(shape) != data.size()) {
    throw ShapeError("tensor data length " + std::to_string(data.size()) +
                     " does not match shape " + shape_string(shape));
  }
  auto node = std::make_shared<internal::Node>();
  node->shape = std::move(shape);
  node->data = std::move(data);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return from({}, {value}, requires_grad);
}

double Tensor::item() const {
  if (numel() != 1) {
    throw ShapeError("item() on tensor of shape " + shape_string(shape()));
  }
  return node_->data[0];
}

double Tensor::at(std::size_t row, std::size_t col) const {
  if (rank() != 2) throw ShapeError("at(row, col) requires a 2-d tensor");
  return node_->data[row * node_->shape[1] + col];
}

Tensor Tensor::detach() const {
  return from(node_->shape, node_->data, false);
}

Tensor Tensor::clone() const {
  return from(node_->shape, node_->data, node_->requires_grad);
}

Tape::Tape(const Tensor& root, std::uint64_t seed) : root_(root), seed_(seed) {
  // Iterative post-order DFS: a node is emitted once all inputs are emitted.
  std::unordered_set<internal::Node*> visited;
  std::vector<std::pair<internal::Node*, std::size_t>> stack;
  internal::Node* start = root.node().get();
  if (!start->requires_grad) return;
  stack.emplace_back(start, 0);
  visited.insert(start);
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      internal::Node* child = node->inputs[next++].get();
      if (child->requires_grad && visited.insert(child).second) {
        stack.emplace_back(child, 0);
      }
    } else {
      order_.push_back(node);
      stack.pop_back();
    }
  }
}

void Tape::backward() {
  if (order_.empty()) return;
  internal::Node* root = order_.back();
  std::vector<double>& seed_grad = root->ensure_grad();
  for (double& g : seed_grad) g += 1.0;
  for (auto it = order_.rbegin(); it != order_.rend(); ++it) {
    internal::Node* node = *it;
    if (node->inputs.empty()) continue;
    if (!node->grad.empty() && node->backward) node->backward(*node);
    // Interior gradients are scratch space for this sweep only.
    node->grad.clear();
    node->grad.shrink_to_fit();
  }
}

void backward(const Tensor& loss) {
  if (loss.numel() != 1) {
    throw ConfigError("backward() requires a scalar loss, got shape " +
                      shape_string(loss.shape()));
  }
  Tape tape(loss);
  tape.backward();
}

}  // namespace mmgd
