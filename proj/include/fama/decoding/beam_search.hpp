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

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "fama/common.hpp"
#include "fama/model/fama_model.hpp"
#include "fama/textproc/vocabulary.hpp"
#include "json.hpp"

namespace fama::train {
struct Dataset;
}

namespace fama::decode {

using text::TokenId;

struct DecodeConfig {
  std::size_t beam = 5;
  double unk_penalty = 10000.0;
  std::size_t no_repeat_ngram = 5;    // 0 disables blocking
  double ctc_weight = 0.2;
  double max_len_factor = 1.0;        // output cap: factor * encoder frames + max_len_extra
  std::size_t max_len_extra = 10;
  bool length_normalize = true;

  void validate() const;
  std::size_t max_len(std::size_t frames) const;
  nlohmann::json to_json() const;
};

struct Hypothesis {
  std::vector<TokenId> tokens;  // generated tokens, eos last when finished
  double attn_logp = 0.0;
  double ctc_logp = 0.0;
  double score = 0.0;
  bool finished() const { return !tokens.empty() && tokens.back() == text::Vocabulary::kEos; }
};

/// ((1 - w) * attn + w * ctc) / |tokens| (no division when !length_normalize).
double combined_score(double attn_logp, double ctc_logp, std::size_t length, double w, bool length_normalize);

/// Scores every hypothesis against the CTC log-probs [frames, vocab] and
/// stable-sorts by combined score, best first.
std::vector<Hypothesis> joint_rescore(std::vector<Hypothesis> hyps, std::span<const double> ctc_lp,
                                      std::size_t frames, std::size_t vocab, double w, bool length_normalize = true);

/// Beam search for batch row `row` of `mem`, starting from [bos, lang].
/// `ctc_lp` holds that row's valid frames of the CTC head used for
/// rescoring. Returns finished hypotheses, best first (never empty).
std::vector<Hypothesis> beam_search(model::FamaModel& model, const model::DecoderMemory& mem, std::size_t row,
                                    std::span<const double> ctc_lp, std::size_t frames, Lang lang,
                                    const text::Vocabulary& vocab, const DecodeConfig& cfg);

/// Encodes a padded feature batch and beam-searches every row.
std::vector<std::vector<Hypothesis>> decode_batch(model::FamaModel& model, const num::Tensor& features,
                                                  std::span<const std::size_t> lengths, std::span<const Lang> langs,
                                                  const text::Vocabulary& vocab, const DecodeConfig& cfg);

/// Attention-only argmax decoding under the same masks as beam_search
/// (unk penalty, n-gram blocking, length cap); beam and CTC weight are unused.
std::vector<TokenId> greedy_decode(model::FamaModel& model, const model::DecoderMemory& mem, std::size_t row,
                                   std::size_t frames, Lang lang, const DecodeConfig& cfg);

struct DecodedUtterance {
  std::string utt_id;
  std::string text;
  Hypothesis best;
  nlohmann::json to_json() const;
};

/// Decodes every utterance of `data` in batches of `batch_size` (manifest
/// order). Output language is the task's: source for ASR, target for ST.
std::vector<DecodedUtterance> decode_dataset(model::FamaModel& model, const train::Dataset& data, Task task,
                                             const text::Vocabulary& vocab, const DecodeConfig& cfg,
                                             std::size_t batch_size = 1);

/// One JSON object per line: utt_id, text, attn_logp, ctc_logp, score.
void write_decodes(const std::vector<DecodedUtterance>& decodes, const std::filesystem::path& path);

/// Text without the trailing eos.
std::string hypothesis_text(const Hypothesis& h, const text::Vocabulary& vocab);

}  // namespace fama::decode
