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

#include "fama/numcore/tensor.hpp"
#include "fama/textproc/vocabulary.hpp"

namespace fama::loss {

using num::Real;
using num::Tensor;
using text::TokenId;

std::size_t count_tokens(std::span<const TokenId> targets, TokenId pad_id = text::Vocabulary::kPad);

/// Label-smoothed cross-entropy over log-probs [..., V] with one target per
/// row. Per token: (1 - eps) * -lp[target] + eps * mean_v(-lp[v]); pad rows
/// are skipped. The sum is divided by `denominator`, or by the number of
/// non-pad targets when it is 0. An all-pad batch is rejected.
Tensor label_smoothed_ce(const Tensor& logprobs, std::span<const TokenId> targets, Real smoothing,
                         TokenId pad_id = text::Vocabulary::kPad, Real denominator = 0.0);

}  // namespace fama::loss
