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
#include <string_view>
#include <vector>

#include "fama/model/config.hpp"
#include "fama/model/layers.hpp"
#include "fama/textproc/vocabulary.hpp"

namespace fama::model {

using text::TokenId;

enum class CtcHead { kSrc, kTgt };

/// "src" (encoder tap) or "tgt" (final encoder output); anything else is rejected.
CtcHead parse_ctc_head(std::string_view name);

struct EncoderOutput {
  Tensor states;       // [B, T', d]
  Tensor tap_states;   // [B, T', d], after block tap_layer
  std::vector<std::size_t> lengths;
  std::size_t batch() const { return states.dim(0); }
  std::size_t frames() const { return states.dim(1); }
};

/// Cross-attention keys and values of every decoder layer for one encoder output.
struct DecoderMemory {
  std::vector<Tensor> keys, values;  // per layer, [B, T', d]
  std::vector<std::size_t> lengths;
  std::size_t batch() const { return lengths.size(); }
  /// Non-differentiable copy holding the listed batch rows (repeats allowed).
  DecoderMemory select(std::span<const std::size_t> rows) const;
};

struct ModelOutputs {
  EncoderOutput enc;
  Tensor decoder_logprobs;  // [B, L, V]
  Tensor ctc_src_logprobs;  // [B, T', V]
  Tensor ctc_tgt_logprobs;
};

class FamaModel {
 public:
  explicit FamaModel(const ModelConfig& config);

  const ModelConfig& config() const { return config_; }
  void set_training(bool on) { training_ = on; }
  bool training() const { return training_; }
  void reseed_dropout(std::uint64_t seed) { dropout_rng_ = num::Rng(seed); }

  /// features [B, T, n_mels] with per-row valid frame counts -> [B, T', d];
  /// positions past each row's subsampled length are zero. Rows shorter
  /// than the kernel are rejected.
  Tensor subsample(const Tensor& features, std::span<const std::size_t> lengths,
                   std::vector<std::size_t>* out_lengths = nullptr);

  EncoderOutput encode(const Tensor& features, std::span<const std::size_t> lengths);

  /// Per-frame log-probabilities over the vocabulary (blank included).
  Tensor ctc_head(const Tensor& states, CtcHead which) const;
  Tensor ctc_head(const Tensor& states, std::string_view which) const { return ctc_head(states, parse_ctc_head(which)); }

  DecoderMemory memory(const EncoderOutput& enc) const;

  /// Teacher-forced decoder over tokens [B, L] (row-major) -> log-probs [B, L, V].
  Tensor decode(const DecoderMemory& mem, std::span<const TokenId> tokens, std::size_t len);

  /// Next-token log-probs [V] after `prefix` for a single-utterance encoder output.
  Tensor decode_step(const EncoderOutput& enc, std::span<const TokenId> prefix);

  /// Encoder, both CTC heads and the teacher-forced decoder in one pass.
  ModelOutputs forward(const Tensor& features, std::span<const std::size_t> lengths,
                       std::span<const TokenId> decoder_inputs, std::size_t dec_len);

  ParamSet& params() { return params_; }
  const ParamSet& params() const { return params_; }
  std::size_t parameter_count() const { return params_.count(); }
  void zero_grad();

 private:
  ForwardCtx ctx() { return {training_, config_.dropout, &dropout_rng_}; }

  ModelConfig config_;
  ParamSet params_;
  bool training_ = false;
  num::Rng dropout_rng_;

  Tensor conv1_w_, conv1_b_, conv2_w_, conv2_b_;
  Linear sub_proj_;
  std::vector<ConformerBlock> enc_blocks_;
  Linear ctc_src_, ctc_tgt_;
  Tensor embed_;
  std::vector<DecoderLayer> dec_layers_;
  LayerNorm dec_norm_;
  Linear out_proj_;
};

}  // namespace fama::model
