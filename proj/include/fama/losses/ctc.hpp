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

#include <span>
#include <vector>

#include "fama/numcore/tensor.hpp"
#include "fama/textproc/vocabulary.hpp"

namespace fama::loss {

using num::Real;
using num::Tensor;
using text::TokenId;

/// Smallest frame count that admits an alignment: L plus one blank between
/// each pair of equal adjacent labels.
std::size_t ctc_min_frames(std::span<const TokenId> target);

struct CtcResult {
  Real nll = 0.0;  // +inf when infeasible
  bool feasible = true;
};

/// Negative log-likelihood over log-probs laid out [frames, vocab].
CtcResult ctc_nll(std::span<const Real> logprobs, std::size_t frames, std::size_t vocab,
                  std::span<const TokenId> target, TokenId blank = text::Vocabulary::kBlank);

/// As above, also writing d nll / d logprobs into `grad` ([frames, vocab]).
/// The gradient is left zero for infeasible targets.
CtcResult ctc_nll_grad(std::span<const Real> logprobs, std::size_t frames, std::size_t vocab,
                       std::span<const TokenId> target, std::span<Real> grad,
                       TokenId blank = text::Vocabulary::kBlank);

struct CtcLoss {
  Tensor loss;  // scalar
  bool feasible = true;
};

/// Differentiable CTC for one sequence. logprobs [T, V]; only the first
/// input_len frames are used.
CtcLoss ctc_loss(const Tensor& logprobs, std::span<const TokenId> target, std::size_t input_len,
                 TokenId blank = text::Vocabulary::kBlank);

struct CtcBatchLoss {
  Tensor sum;                   // scalar: sum over feasible rows of nll / max(L, 1)
  Real value_sum = 0.0;         // same, as a plain number
  std::size_t feasible = 0;
  std::size_t infeasible = 0;   // rows left out of `sum`
};

/// logprobs [B, T, V] with per-row frame lengths and targets. Each row's nll
/// is divided by its target length before summing.
CtcBatchLoss ctc_loss_batch(const Tensor& logprobs, std::span<const std::size_t> lengths,
                            const std::vector<std::vector<TokenId>>& targets,
                            TokenId blank = text::Vocabulary::kBlank);

}  // namespace fama::loss
