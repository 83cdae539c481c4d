// Copyright 2026 sefpnet authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <functional>
#include <memory>
#include <unordered_set>
#include <utility>
#include <vector>

#include "sefpnet/tensor.hpp"

namespace sefpnet {

// Reverse-mode tape. Nodes own their value; children hold shared_ptr to
// parents, so a graph is freed once the downstream Vars go out of scope.
// Parameter leaves are long-lived Vars whose grads accumulate across calls
// until zero_grad().
struct Node {
  Tensor value;
  Tensor grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  // Reads this->grad and accumulates into parents' grads.
  std::function<void(Node&)> backward;

  void ensure_grad() {
    if (!grad.same_shape(value)) grad = Tensor::zeros(value.shape());
  }
  void accum(const Tensor& g) {
    ensure_grad();
    grad.add_(g);
  }
};

class Var {
 public:
  Var() = default;
  explicit Var(Tensor value, bool requires_grad = false)
      : node_(std::make_shared<Node>()) {
    node_->value = std::move(value);
    node_->requires_grad = requires_grad;
    if (requires_grad) node_->ensure_grad();
  }

  bool defined() const { return node_ != nullptr; }
  const Tensor& value() const { return node_->value; }
  Tensor& value() { return node_->value; }
  Tensor& grad() {
    node_->ensure_grad();
    return node_->grad;
  }
  const Tensor& grad() const { return node_->grad; }
  bool requires_grad() const { return node_ && node_->requires_grad; }
  void zero_grad() {
    if (node_) {
      node_->ensure_grad();
      node_->grad.fill(0.0);
    }
  }
  std::shared_ptr<Node> node() const { return node_; }

  const Shape& shape() const { return node_->value.shape(); }
  int64_t numel() const { return node_->value.numel(); }

 private:
  friend Var make_op(Tensor, std::vector<Var>, std::function<void(Node&)>);
  std::shared_ptr<Node> node_;
};

// Builds an op node. The backward hook is dropped when no parent requires
// grad, so inference-only graphs carry no tape.
inline Var make_op(Tensor value, std::vector<Var> parents,
                   std::function<void(Node&)> backward) {
  Var out;
  out.node_ = std::make_shared<Node>();
  out.node_->value = std::move(value);
  bool needs = false;
  for (const Var& p : parents) needs = needs || p.requires_grad();
  out.node_->requires_grad = needs;
  if (needs) {
    out.node_->parents.reserve(parents.size());
    for (Var& p : parents) out.node_->parents.push_back(p.node());
    out.node_->backward = std::move(backward);
  }
  return out;
}

// Runs reverse-mode accumulation from `root`, seeding with ones.
inline void backward(const Var& root) {
  if (!root.requires_grad()) return;
  // Iterative post-order topological sort.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, size_t>> stack;
  stack.emplace_back(root.node().get(), 0);
  visited.insert(root.node().get());
  while (!stack.empty()) {
    auto& [n, idx] = stack.back();
    if (idx < n->parents.size()) {
      Node* p = n->parents[idx++].get();
      if (p->requires_grad && !visited.count(p)) {
        visited.insert(p);
        stack.emplace_back(p, 0);
      }
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }
  root.node()->accum(Tensor::full(root.shape(), 1.0));
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward) {
      n->ensure_grad();
      n->backward(*n);
    }
  }
}

}  // namespace sefpnet
