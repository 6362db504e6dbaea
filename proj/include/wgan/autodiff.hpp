#pragma once

#include <functional>
#include <memory>
#include <unordered_set>
#include <utility>
#include <vector>

#include "wgan/tensor.hpp"

namespace wgan {

// Reverse-mode autodiff over a dynamically built DAG. Each op allocates a
// Node holding the forward value; the backward closure reads node.grad and
// accumulates into the inputs' grads. Nodes that do not require gradients
// drop their inputs, so frozen forward passes keep no graph alive.
struct Node {
  Tensor value;
  Tensor grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backward_fn;

  Tensor& ensure_grad() {
    if (grad.numel() != value.numel()) grad = Tensor::zeros(value.shape());
    return grad;
  }
  void zero_grad() {
    if (grad.numel() == value.numel())
      grad.array().setZero();
  }
};

using Value = std::shared_ptr<Node>;

inline Value constant(Tensor v) {
  auto n = std::make_shared<Node>();
  n->value = std::move(v);
  return n;
}

inline Value parameter(Tensor v) {
  auto n = std::make_shared<Node>();
  n->value = std::move(v);
  n->requires_grad = true;
  return n;
}

// new leaf sharing the same value; gradients stop here
inline Value detach(const Value& v) { return constant(v->value); }

inline Value make_node(Tensor value, std::vector<Value> inputs,
                       std::function<void(Node&)> backward_fn) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  for (const auto& in : inputs) n->requires_grad |= in->requires_grad;
  if (n->requires_grad) {
    n->inputs = std::move(inputs);
    n->backward_fn = std::move(backward_fn);
  }
  return n;
}

// Runs backpropagation from a scalar root. Grads accumulate, so callers
// zero parameter grads between optimization steps.
inline void backward(const Value& root) {
  WGAN_CHECK(root->value.numel() == 1, "backward() root must be scalar");
  if (!root->requires_grad) return;

  // iterative post-order topo sort over nodes that require grad
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, size_t>> stack;
  stack.emplace_back(root.get(), 0);
  visited.insert(root.get());
  while (!stack.empty()) {
    auto& [node, idx] = stack.back();
    if (idx < node->inputs.size()) {
      Node* next = node->inputs[idx++].get();
      if (next->requires_grad && !visited.count(next)) {
        visited.insert(next);
        stack.emplace_back(next, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  root->ensure_grad().array().setConstant(1.0);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward_fn) {
      n->ensure_grad();
      n->backward_fn(*n);
    }
  }
}

}  // namespace wgan
