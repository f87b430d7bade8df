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

#include "fama/losses/cross_entropy.hpp"

#include <memory>
#include <vector>

#include "fama/numcore/autograd.hpp"

namespace fama::loss {

std::size_t count_tokens(std::span<const TokenId> targets, TokenId pad_id) {
  std::size_t n = 0;
  for (TokenId t : targets) n += t != pad_id;
  return n;
}

Tensor label_smoothed_ce(const Tensor& logprobs, std::span<const TokenId> targets, Real smoothing,
                         TokenId pad_id, Real denominator) {
  if (logprobs.rank() < 1) throw ShapeError("label_smoothed_ce: scalar log-probs");
  const std::size_t V = logprobs.shape().back();
  const std::size_t rows = V == 0 ? 0 : logprobs.numel() / V;
  if (rows != targets.size()) {
    throw ShapeError("label_smoothed_ce: " + std::to_string(targets.size()) + " targets for log-probs " +
                     num::shape_str(logprobs.shape()));
  }
  if (!(smoothing >= 0.0 && smoothing < 1.0)) throw ValueError("label_smoothed_ce: smoothing must lie in [0, 1)");
  const std::size_t tokens = count_tokens(targets, pad_id);
  if (tokens == 0) throw ValueError("label_smoothed_ce: every target is padding");
  if (denominator == 0.0) denominator = static_cast<Real>(tokens);
  if (!(denominator > 0.0)) throw ValueError("label_smoothed_ce: denominator must be positive");

  auto lp = logprobs.data();
  const Real eps_v = smoothing / static_cast<Real>(V);
  Real total = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    const TokenId t = targets[r];
    if (t == pad_id) continue;
    if (t < 0 || static_cast<std::size_t>(t) >= V) {
      throw ValueError("label_smoothed_ce: target id " + std::to_string(t) + " outside vocabulary of " +
                       std::to_string(V));
    }
    const Real* row = lp.data() + r * V;
    Real row_sum = 0.0;
    for (std::size_t v = 0; v < V; ++v) row_sum += row[v];
    total += (1.0 - smoothing) * -row[static_cast<std::size_t>(t)] + eps_v * -row_sum;
  }
  Tensor out = Tensor::scalar(total / denominator);
  if (num::detail::needs_grad({&logprobs})) {
    std::vector<TokenId> saved(targets.begin(), targets.end());
    num::detail::record(out, "label_smoothed_ce", {&logprobs},
                        [saved = std::move(saved), V, smoothing, eps_v, pad_id, denominator](
                            std::span<const Real> g, num::detail::GradSink& sink) {
                          auto gx = sink[0];
                          const Real s = g[0] / denominator;
                          for (std::size_t r = 0; r < saved.size(); ++r) {
                            if (saved[r] == pad_id) continue;
                            Real* row = gx.data() + r * V;
                            for (std::size_t v = 0; v < V; ++v) row[v] -= s * eps_v;
                            row[static_cast<std::size_t>(saved[r])] -= s * (1.0 - smoothing);
                          }
                        });
  }
  return out;
}

}  // namespace fama::loss
