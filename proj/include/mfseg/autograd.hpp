// Copyright 2026 The mfseg Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Minimal reverse-mode automatic differentiation over Tensor values.
//
// A forward pass builds a DAG of Nodes. Each op node owns its output value,
// shared pointers to its inputs, and a closure that reads the node's
// accumulated gradient and adds contributions into the inputs' gradients.
// Parameters are long-lived leaves; everything else is released when the
// last Var referencing the graph goes away.

#ifndef MFSEG_AUTOGRAD_HPP_
#define MFSEG_AUTOGRAD_HPP_

#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <unordered_set>
#include <utility>
#include <vector>

#include "mfseg/tensor.hpp"

namespace mfseg {

template <typename Scalar>
struct Node {
  Tensor<Scalar> value;
  Tensor<Scalar> grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backward;

  const Shape& shape() const { return value.shape(); }

  Tensor<Scalar>& grad_buffer() {
    if (grad.empty()) grad = Tensor<Scalar>::Zero(value.shape());
    return grad;
  }
  Node& input(std::size_t i) { return *inputs[i]; }
};

template <typename Scalar>
using Var = std::shared_ptr<Node<Scalar>>;

template <typename Scalar>
Var<Scalar> constant(Tensor<Scalar> value) {
  auto node = std::make_shared<Node<Scalar>>();
  node->value = std::move(value);
  return node;
}

template <typename Scalar>
Var<Scalar> leaf(Tensor<Scalar> value) {
  auto node = constant(std::move(value));
  node->requires_grad = true;
  return node;
}

// Builds an op node. The backward closure and the input references are
// dropped when no input needs a gradient, so inference graphs stay small.
template <typename Scalar>
Var<Scalar> make_op(Tensor<Scalar> value, std::vector<Var<Scalar>> inputs,
                    std::function<void(Node<Scalar>&)> backward) {
  auto node = std::make_shared<Node<Scalar>>();
  node->value = std::move(value);
  for (const auto& in : inputs) node->requires_grad |= in->requires_grad;
  if (node->requires_grad) {
    node->inputs = std::move(inputs);
    node->backward = std::move(backward);
  }
  return node;
}

// Propagates seed gradients from several roots at once (deep supervision
// heads share most of their graph).
template <typename Scalar>
void backward(std::span<const Var<Scalar>> roots,
              std::span<const Tensor<Scalar>> seeds) {
  if (roots.size() != seeds.size()) {
    throw std::invalid_argument("backward: roots and seeds differ in count");
  }
  std::vector<Node<Scalar>*> order;
  std::unordered_set<Node<Scalar>*> visited;
  // Iterative post-order DFS.
  std::vector<std::pair<Node<Scalar>*, std::size_t>> stack;
  for (const auto& root : roots) {
    if (!root->requires_grad || !visited.insert(root.get()).second) continue;
    stack.emplace_back(root.get(), 0);
    while (!stack.empty()) {
      auto& [node, next] = stack.back();
      if (next < node->inputs.size()) {
        Node<Scalar>* child = node->inputs[next++].get();
        if (child->requires_grad && visited.insert(child).second) {
          stack.emplace_back(child, 0);
        }
      } else {
        order.push_back(node);
        stack.pop_back();
      }
    }
  }
  for (std::size_t i = 0; i < roots.size(); ++i) {
    if (!roots[i]->requires_grad) continue;
    if (!(seeds[i].shape() == roots[i]->shape())) {
      throw std::invalid_argument("backward: seed shape " +
                                  to_string(seeds[i].shape()) +
                                  " does not match root " +
                                  to_string(roots[i]->shape()));
    }
    roots[i]->grad_buffer().array() += seeds[i].array();
  }
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node<Scalar>& node = **it;
    if (node.backward && !node.grad.empty()) node.backward(node);
  }
}

template <typename Scalar>
void backward(const Var<Scalar>& root, const Tensor<Scalar>& seed) {
  backward<Scalar>(std::span<const Var<Scalar>>(&root, 1),
                   std::span<const Tensor<Scalar>>(&seed, 1));
}

}  // namespace mfseg

#endif  // MFSEG_AUTOGRAD_HPP_
