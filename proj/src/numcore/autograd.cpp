// Copyright 2026 The FAMA-desk Authors.
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

#include "fama/numcore/autograd.hpp"

#include <cmath>
#include <unordered_set>

namespace fama::num {

namespace {
thread_local bool t_grad_enabled = true;
thread_local bool t_strict = false;
}  // namespace

namespace detail {

bool grad_enabled() { return t_grad_enabled; }
bool strict_mode() { return t_strict; }

std::span<Real> GradSink::operator[](std::size_t input) {
  TensorImpl& in = *node_.inputs.at(input);
  if (in.node) {
    if (in.node->grad.size() != in.node->out_numel) in.node->grad.assign(in.node->out_numel, 0.0);
    return {in.node->grad.data(), in.node->grad.size()};
  }
  if (!in.requires_grad) return {};
  if (in.grad.size() != in.data->size()) in.grad.assign(in.data->size(), 0.0);
  return {in.grad.data(), in.grad.size()};
}

bool GradSink::wants(std::size_t input) const {
  const TensorImpl& in = *node_.inputs.at(input);
  return in.node != nullptr || in.requires_grad;
}

bool needs_grad(std::initializer_list<const Tensor*> inputs) {
  if (!t_grad_enabled) return false;
  for (const Tensor* t : inputs) {
    if (t && t->defined() && t->requires_grad()) return true;
  }
  return false;
}

void record(Tensor& out, const char* kind, std::initializer_list<const Tensor*> inputs,
            BackwardFn fn) {
  auto node = std::make_shared<Node>();
  node->kind = kind;
  node->out_numel = out.numel();
  for (const Tensor* t : inputs) node->inputs.push_back(t->impl());
  node->backward = std::move(fn);
  out.impl()->node = std::move(node);
}

void check_finite(const char* kind, std::initializer_list<const Tensor*> inputs) {
  if (!t_strict) return;
  for (const Tensor* t : inputs) {
    if (!t || !t->defined()) continue;
    for (Real v : t->data()) {
      if (!std::isfinite(v)) {
        throw ValueError(std::string(kind) + ": non-finite input of shape " + shape_str(t->shape()) +
                         " rejected in strict mode");
      }
    }
  }
}

}  // namespace detail

Graph Graph::from(const Tensor& root) {
  Graph g;
  if (!root.defined() || !root.impl()->node) return g;
  std::unordered_set<const detail::Node*> seen;
  // Iterative post-order DFS.
  std::vector<std::pair<std::shared_ptr<detail::Node>, std::size_t>> stack;
  stack.emplace_back(root.impl()->node, 0);
  seen.insert(root.impl()->node.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      const auto& child = node->inputs[next++]->node;
      if (child && seen.insert(child.get()).second) stack.emplace_back(child, 0);
    } else {
      g.nodes_.push_back(node);
      stack.pop_back();
    }
  }
  return g;
}

void backward(const Tensor& root, std::span<const Real> seed) { backward(Graph::from(root), root, seed); }

void backward(const Graph& graph, const Tensor& root, std::span<const Real> seed) {
  if (graph.empty()) return;
  for (const auto& node : graph.nodes()) {
    if (node->consumed) {
      throw ValueError("backward: graph already differentiated (node '" + node->kind +
                       "'); run the forward pass again");
    }
  }
  auto& root_node = *root.impl()->node;
  if (seed.empty()) {
    if (root.numel() != 1) {
      throw ShapeError("backward: non-scalar root " + shape_str(root.shape()) + " needs an explicit seed");
    }
    root_node.grad.assign(1, 1.0);
  } else {
    if (seed.size() != root.numel()) {
      throw ShapeError("backward: seed has " + std::to_string(seed.size()) + " values for root " +
                       shape_str(root.shape()));
    }
    root_node.grad.assign(seed.begin(), seed.end());
  }
  const auto& nodes = graph.nodes();
  for (auto it = nodes.rbegin(); it != nodes.rend(); ++it) {
    detail::Node& node = **it;
    if (!node.grad.empty()) {
      detail::GradSink sink(node);
      node.backward({node.grad.data(), node.grad.size()}, sink);
    }
    node.consumed = true;
    node.backward = nullptr;
    node.inputs.clear();
  }
  // Interior gradients are no longer needed once propagated.
  for (const auto& node : nodes) {
    if (node.get() != &root_node) std::vector<Real>().swap(node->grad);
  }
}

NoGradGuard::NoGradGuard() : previous_(t_grad_enabled) { t_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { t_grad_enabled = previous_; }

StrictModeGuard::StrictModeGuard() : previous_(t_strict) { t_strict = true; }
StrictModeGuard::~StrictModeGuard() { t_strict = previous_; }

}  // namespace fama::num
