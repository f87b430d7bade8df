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
#include <string>
#include <vector>

namespace fama::eval {

struct EditCounts {
  std::size_t substitutions = 0;
  std::size_t deletions = 0;
  std::size_t insertions = 0;
  std::size_t ref_words = 0;
  std::size_t errors() const { return substitutions + deletions + insertions; }
};

/// Word-level Levenshtein alignment with unit costs. Among equal-cost
/// alignments the backtrace prefers substitution, then insertion, then deletion.
EditCounts align_words(std::span<const std::string> ref, std::span<const std::string> hyp);

std::vector<std::string> split_words(std::string_view s);

struct WerResult {
  double wer = 0.0;
  EditCounts counts;
  std::size_t utterances = 0;
};

/// Corpus WER pooled over all pairs; both sides are normalised first unless
/// `normalize` is false. Requires equal counts and at least one reference word.
WerResult wer(std::span<const std::string> refs, std::span<const std::string> hyps, bool normalize = true);

}  // namespace fama::eval
