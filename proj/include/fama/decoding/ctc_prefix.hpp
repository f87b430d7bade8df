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

#include "fama/textproc/vocabulary.hpp"

namespace fama::decode {

using text::TokenId;

/// log P(prefix is a prefix of the CTC label sequence) given frame log-probs
/// lp [frames, vocab]. The empty prefix scores 0; a prefix ending in eos is
/// scored as a complete sequence (the eos itself is not a CTC label), which
/// equals minus the CTC loss of that sequence. Unreachable prefixes give -inf.
double ctc_prefix_score(std::span<const TokenId> prefix, std::span<const double> lp, std::size_t frames,
                        std::size_t vocab, TokenId blank = text::Vocabulary::kBlank,
                        TokenId eos = text::Vocabulary::kEos);

/// Complete-sequence log-probability of `labels` (no eos).
double ctc_sequence_score(std::span<const TokenId> labels, std::span<const double> lp, std::size_t frames,
                          std::size_t vocab, TokenId blank = text::Vocabulary::kBlank);

/// Best path: per-frame argmax (lowest id on ties), repeats collapsed, blanks dropped.
std::vector<TokenId> greedy_ctc(std::span<const double> lp, std::size_t frames, std::size_t vocab,
                                TokenId blank = text::Vocabulary::kBlank);

}  // namespace fama::decode
