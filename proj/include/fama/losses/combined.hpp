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

#include "fama/common.hpp"
#include "fama/numcore/tensor.hpp"
#include "fama/textproc/manifest.hpp"
#include "fama/textproc/vocabulary.hpp"

namespace fama::loss {

using num::Real;
using num::Tensor;
using text::TokenId;

struct LossWeights {
  Real lambda_ce = 5.0;
  Real lambda_ctc_src = 1.0;
  Real lambda_ctc_tgt = 2.0;
  Real smoothing = 0.1;
  void validate() const;
};

struct LossBreakdown {
  Real ce = 0.0;
  Real ctc_src = 0.0;
  Real ctc_tgt = 0.0;
  Real total = 0.0;
  std::size_t token_count = 0;
};

/// (lambda_ce * ce + lambda_ctc_src * ctc_src) + lambda_ctc_tgt * ctc_tgt, in that order.
Real combine(const LossWeights& w, Real ce, Real ctc_src, Real ctc_tgt);

/// Token sequences for one batch, rows padded to a common decoder length.
struct LossTargets {
  std::size_t batch = 0;
  std::size_t dec_len = 0;
  std::vector<TokenId> decoder_inputs;   // [batch * dec_len]: bos, lang, chars..., pad
  std::vector<TokenId> decoder_targets;  // [batch * dec_len]: pad, chars..., eos, pad
  std::vector<std::vector<TokenId>> ctc_src;  // transcript characters
  std::vector<std::vector<TokenId>> ctc_tgt;  // task target characters
  std::vector<Task> tasks;
  std::vector<Lang> out_langs;
};

/// CE targets follow each row's task (transcript for ASR, translation for ST);
/// the source CTC always sees the transcript. ST rows without a translation
/// are rejected.
LossTargets make_loss_targets(std::span<const text::ManifestEntry* const> entries, std::span<const Task> tasks,
                              const text::Vocabulary& vocab);

/// Model outputs needed by the objective.
struct LossInputs {
  Tensor decoder_logprobs;  // [B, L, V]
  Tensor ctc_src_logprobs;  // [B, T', V]
  Tensor ctc_tgt_logprobs;  // [B, T', V]
  std::vector<std::size_t> frame_lengths;
};

/// Shared denominators for gradient accumulation; 0 means "this batch only".
struct LossNormalizer {
  Real ce_tokens = 0.0;
  Real sequences = 0.0;
};

struct CombinedLoss {
  Tensor total;  // scalar, differentiable
  LossBreakdown breakdown;
  std::size_t infeasible_ctc = 0;
};

/// CE averaged per non-pad token, each CTC term averaged per sequence after
/// dividing by target length. Infeasible CTC rows are left out and counted.
CombinedLoss combined_loss(const LossInputs& in, const LossTargets& targets, const LossWeights& weights,
                           const LossNormalizer& norm = {});

}  // namespace fama::loss
