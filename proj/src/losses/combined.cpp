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

#include "fama/losses/combined.hpp"

#include <array>

#include "fama/losses/cross_entropy.hpp"
#include "fama/losses/ctc.hpp"
#include "fama/numcore/ops.hpp"

namespace fama::loss {

void LossWeights::validate() const {
  if (!(lambda_ce >= 0.0 && lambda_ctc_src >= 0.0 && lambda_ctc_tgt >= 0.0)) {
    throw ValueError("loss weights must be non-negative");
  }
  if (!(smoothing >= 0.0 && smoothing < 1.0)) throw ValueError("label smoothing must lie in [0, 1)");
}

Real combine(const LossWeights& w, Real ce, Real ctc_src, Real ctc_tgt) {
  return w.lambda_ce * ce + w.lambda_ctc_src * ctc_src + w.lambda_ctc_tgt * ctc_tgt;
}

LossTargets make_loss_targets(std::span<const text::ManifestEntry* const> entries, std::span<const Task> tasks,
                              const text::Vocabulary& vocab) {
  if (entries.size() != tasks.size()) throw ValueError("make_loss_targets: one task per entry required");
  if (entries.empty()) throw ValueError("make_loss_targets: empty batch");
  LossTargets out;
  out.batch = entries.size();
  std::vector<std::vector<TokenId>> dec;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = *entries[i];
    out.ctc_src.push_back(vocab.encode_chars(e.transcript));
    Lang lang = e.src_lang;
    if (tasks[i] == Task::kSt) {
      if (!e.translation || !e.tgt_lang) {
        throw ValueError("ST target requested for '" + text::utterance_id(e) + "' which has no translation");
      }
      out.ctc_tgt.push_back(vocab.encode_chars(*e.translation));
      lang = *e.tgt_lang;
    } else {
      out.ctc_tgt.push_back(out.ctc_src.back());
    }
    out.tasks.push_back(tasks[i]);
    out.out_langs.push_back(lang);
    dec.push_back(out.ctc_tgt.back());
    out.dec_len = std::max(out.dec_len, dec.back().size() + 2);
  }
  out.decoder_inputs.assign(out.batch * out.dec_len, text::Vocabulary::kPad);
  out.decoder_targets.assign(out.batch * out.dec_len, text::Vocabulary::kPad);
  for (std::size_t i = 0; i < out.batch; ++i) {
    TokenId* in = out.decoder_inputs.data() + i * out.dec_len;
    TokenId* tg = out.decoder_targets.data() + i * out.dec_len;
    in[0] = text::Vocabulary::kBos;
    in[1] = text::Vocabulary::lang_token(out.out_langs[i]);
    const auto& chars = dec[i];
    for (std::size_t j = 0; j < chars.size(); ++j) {
      in[j + 2] = chars[j];
      tg[j + 1] = chars[j];
    }
    tg[chars.size() + 1] = text::Vocabulary::kEos;
  }
  return out;
}

CombinedLoss combined_loss(const LossInputs& in, const LossTargets& targets, const LossWeights& weights,
                           const LossNormalizer& norm) {
  weights.validate();
  const auto& dl = in.decoder_logprobs;
  if (dl.rank() != 3 || dl.dim(0) != targets.batch || dl.dim(1) != targets.dec_len) {
    throw ShapeError("combined_loss: decoder log-probs " + num::shape_str(dl.shape()) + " do not match targets [" +
                     std::to_string(targets.batch) + "x" + std::to_string(targets.dec_len) + "]");
  }
  const std::size_t tokens = count_tokens(targets.decoder_targets);
  const Real ce_den = norm.ce_tokens > 0.0 ? norm.ce_tokens : static_cast<Real>(tokens);
  const Real seq_den = norm.sequences > 0.0 ? norm.sequences : static_cast<Real>(targets.batch);

  Tensor ce = label_smoothed_ce(dl, targets.decoder_targets, weights.smoothing, text::Vocabulary::kPad, ce_den);
  auto src = ctc_loss_batch(in.ctc_src_logprobs, in.frame_lengths, targets.ctc_src);
  auto tgt = ctc_loss_batch(in.ctc_tgt_logprobs, in.frame_lengths, targets.ctc_tgt);
  Tensor ctc_src = num::scale(src.sum, 1.0 / seq_den);
  Tensor ctc_tgt = num::scale(tgt.sum, 1.0 / seq_den);

  CombinedLoss out;
  const std::array<Tensor, 3> terms{ce, ctc_src, ctc_tgt};
  const std::array<Real, 3> w{weights.lambda_ce, weights.lambda_ctc_src, weights.lambda_ctc_tgt};
  out.total = num::weighted_sum(terms, w);
  out.breakdown.ce = ce.item();
  out.breakdown.ctc_src = ctc_src.item();
  out.breakdown.ctc_tgt = ctc_tgt.item();
  out.breakdown.total = combine(weights, out.breakdown.ce, out.breakdown.ctc_src, out.breakdown.ctc_tgt);
  out.breakdown.token_count = tokens;
  out.infeasible_ctc = src.infeasible + tgt.infeasible;
  return out;
}

}  // namespace fama::loss
