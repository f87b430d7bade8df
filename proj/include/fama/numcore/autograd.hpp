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

#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "fama/numcore/tensor.hpp"

namespace fama::num {

namespace detail {

/// Hands out gradient buffers for the inputs of one node during backward.
/// Buffers are allocated lazily and zero-filled; an input that does not take
/// part in differentiation yields an empty span.
class GradSink {
 public:
  explicit GradSink(Node& node) : node_(node) {}
  std::span<Real> operator[](std::size_t input);
  bool wants(std::size_t input) const;

 private:
  Node& node_;
};

using BackwardFn = std::function<void(std::span<const Real> grad_out, GradSink& sink)>;

struct Node {
  std::string kind;
  std::vector<std::shared_ptr<TensorImpl>> inputs;
  BackwardFn backward;
  std::vector<Real> grad;  // gradient w.r.t. this node's output
  std::size_t out_numel = 0;
  bool consumed = false;
};

bool grad_enabled();
bool strict_mode();

/// True when an op over these inputs must be recorded.
bool needs_grad(std::initializer_list<const Tensor*> inputs);

/// Attaches a node to `out` that differentiates through `fn`.
void record(Tensor& out, const char* kind, std::initializer_list<const Tensor*> inputs,
            BackwardFn fn);

/// Rejects non-finite inputs when strict mode is on.
void check_finite(const char* kind, std::initializer_list<const Tensor*> inputs);

}  // namespace detail

/// Topologically ordered view of the nodes reachable from a root tensor.
class Graph {
 public:
  static Graph from(const Tensor& root);

  std::size_t size() const { return nodes_.size(); }
  bool empty() const { return nodes_.empty(); }
  const std::vector<std::shared_ptr<detail::Node>>& nodes() const { return nodes_; }

 private:
  std::vector<std::shared_ptr<detail::Node>> nodes_;  // inputs before consumers
};

/// Runs reverse-mode differentiation from `root`. A scalar root is seeded with
/// 1; otherwise `seed` must provide one value per element. Every reachable
/// leaf with requires_grad accumulates into its grad buffer. Saved context is
/// released afterwards, so a second call on the same graph is rejected.
void backward(const Tensor& root, std::span<const Real> seed = {});
void backward(const Graph& graph, const Tensor& root, std::span<const Real> seed = {});

/// Disables graph recording on the current thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

/// Makes every op reject non-finite inputs on the current thread.
class StrictModeGuard {
 public:
  StrictModeGuard();
  ~StrictModeGuard();
  StrictModeGuard(const StrictModeGuard&) = delete;
  StrictModeGuard& operator=(const StrictModeGuard&) = delete;

 private:
  bool previous_;
};

}  // namespace fama::num
