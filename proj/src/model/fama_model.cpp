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

#include "fama/model/fama_model.hpp"

#include <algorithm>
#include <cmath>

#include "fama/numcore/autograd.hpp"
#include "fama/numcore/ops.hpp"

namespace fama::model {

namespace {

Tensor gather_rows(const Tensor& x, std::span<const std::size_t> rows) {
  num::Shape shape = x.shape();
  const std::size_t inner = x.numel() / shape[0];
  shape[0] = rows.size();
  std::vector<Real> v(rows.size() * inner);
  auto d = x.data();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= x.dim(0)) throw ShapeError("memory select: row " + std::to_string(rows[i]) + " out of range");
    std::copy_n(d.data() + rows[i] * inner, inner, v.data() + i * inner);
  }
  return Tensor::from(std::move(shape), std::move(v));
}

Tensor conv_weight(num::Shape shape, num::Rng& rng) {
  const Real bound = 1.0 / std::sqrt(static_cast<Real>(shape[0] * shape[1]));
  std::vector<Real> v(num::shape_numel(shape));
  for (Real& x : v) x = rng.uniform(-bound, bound);
  return Tensor::from(std::move(shape), std::move(v));
}

}  // namespace

CtcHead parse_ctc_head(std::string_view name) {
  if (name == "src") return CtcHead::kSrc;
  if (name == "tgt") return CtcHead::kTgt;
  throw ValueError("ctc_head: unknown head '" + std::string(name) + "' (expected src or tgt)");
}

DecoderMemory DecoderMemory::select(std::span<const std::size_t> rows) const {
  DecoderMemory out;
  for (std::size_t l = 0; l < keys.size(); ++l) {
    out.keys.push_back(gather_rows(keys[l], rows));
    out.values.push_back(gather_rows(values[l], rows));
  }
  for (std::size_t r : rows) out.lengths.push_back(lengths.at(r));
  return out;
}

FamaModel::FamaModel(const ModelConfig& config) : config_(config), dropout_rng_(config.seed ^ 0x9e3779b97f4a7c15ULL) {
  config_.validate();
  num::Rng rng(config_.seed);
  const std::size_t d = config_.d_model, V = config_.vocab_size;
  conv1_w_ = params_.add("subsample.conv1.weight", conv_weight({kSubsampleKernel, config_.n_mels, 2 * d}, rng));
  conv1_b_ = params_.add("subsample.conv1.bias", Tensor::zeros({2 * d}));
  conv2_w_ = params_.add("subsample.conv2.weight", conv_weight({kSubsampleKernel, d, 2 * d}, rng));
  conv2_b_ = params_.add("subsample.conv2.bias", Tensor::zeros({2 * d}));
  sub_proj_ = Linear::make(params_, "subsample.proj", d, d, true, rng);
  for (std::size_t i = 0; i < config_.enc_layers; ++i) {
    enc_blocks_.push_back(ConformerBlock::make(params_, "encoder." + std::to_string(i), d, config_.heads,
                                               config_.d_ffn, config_.conv_kernel, rng));
  }
  ctc_src_ = Linear::make(params_, "ctc_src", d, V, true, rng);
  ctc_tgt_ = Linear::make(params_, "ctc_tgt", d, V, true, rng);
  {
    std::vector<Real> e(V * d);
    const Real sd = 1.0 / std::sqrt(static_cast<Real>(d));
    for (Real& x : e) x = rng.normal() * sd;
    for (std::size_t j = 0; j < d; ++j) e[text::Vocabulary::kPad * d + j] = 0.0;
    embed_ = params_.add("decoder.embed", Tensor::from({V, d}, std::move(e)));
  }
  for (std::size_t i = 0; i < config_.dec_layers; ++i) {
    dec_layers_.push_back(
        DecoderLayer::make(params_, "decoder." + std::to_string(i), d, config_.heads, config_.d_ffn, rng));
  }
  dec_norm_ = LayerNorm::make(params_, "decoder.norm", d);
  out_proj_ = Linear::make(params_, "decoder.out", d, V, false, rng);
}

void FamaModel::zero_grad() {
  for (auto& [_, t] : params_.entries()) t.zero_grad();
}

Tensor FamaModel::subsample(const Tensor& features, std::span<const std::size_t> lengths,
                            std::vector<std::size_t>* out_lengths) {
  if (features.rank() != 3 || features.dim(2) != config_.n_mels) {
    throw ShapeError("subsample: expected features [B,T," + std::to_string(config_.n_mels) + "], got " +
                     num::shape_str(features.shape()));
  }
  const std::size_t B = features.dim(0), T = features.dim(1);
  if (lengths.size() != B) throw ShapeError("subsample: one length per batch row required");
  for (std::size_t len : lengths) {
    if (len > T) throw ShapeError("subsample: length " + std::to_string(len) + " exceeds " + std::to_string(T) + " frames");
    if (len < kSubsampleKernel) {
      throw ShapeError("subsample: " + std::to_string(len) + " frames is shorter than the kernel (" +
                       std::to_string(kSubsampleKernel) + ")");
    }
  }
  std::vector<std::size_t> l1, l2;
  for (std::size_t len : lengths) {
    l1.push_back(num::conv_out_length(len, kSubsampleKernel, kSubsampleStride));
    l2.push_back(num::conv_out_length(l1.back(), kSubsampleKernel, kSubsampleStride));
  }
  auto c = ctx();
  Tensor x = num::mask_time(features, lengths);
  x = num::mask_time(num::glu(num::conv1d(x, conv1_w_, conv1_b_, kSubsampleStride)), l1);
  x = num::mask_time(num::glu(num::conv1d(x, conv2_w_, conv2_b_, kSubsampleStride)), l2);
  x = num::scale(sub_proj_(x), std::sqrt(static_cast<Real>(config_.d_model)));
  x = num::add_broadcast(x, num::sinusoidal_positions(x.dim(1), config_.d_model));
  x = num::mask_time(c.drop(x), l2);
  if (out_lengths) *out_lengths = std::move(l2);
  return x;
}

EncoderOutput FamaModel::encode(const Tensor& features, std::span<const std::size_t> lengths) {
  EncoderOutput out;
  Tensor x = subsample(features, lengths, &out.lengths);
  auto c = ctx();
  for (std::size_t i = 0; i < enc_blocks_.size(); ++i) {
    x = enc_blocks_[i](x, out.lengths, c);
    if (i + 1 == config_.tap_layer) out.tap_states = x;
  }
  out.states = x;
  return out;
}

Tensor FamaModel::ctc_head(const Tensor& states, CtcHead which) const {
  const Linear& head = which == CtcHead::kSrc ? ctc_src_ : ctc_tgt_;
  return num::log_softmax(head(states));
}

DecoderMemory FamaModel::memory(const EncoderOutput& enc) const {
  DecoderMemory mem;
  mem.lengths = enc.lengths;
  for (const auto& layer : dec_layers_) {
    mem.keys.push_back(layer.cross_attn.k(enc.states));
    mem.values.push_back(layer.cross_attn.v(enc.states));
  }
  return mem;
}

Tensor FamaModel::decode(const DecoderMemory& mem, std::span<const TokenId> tokens, std::size_t len) {
  const std::size_t B = mem.batch();
  if (len == 0 || tokens.size() != B * len) {
    throw ShapeError("decode: " + std::to_string(tokens.size()) + " tokens for batch " + std::to_string(B) +
                     " and length " + std::to_string(len));
  }
  auto c = ctx();
  const std::size_t d = config_.d_model;
  Tensor x = num::scale(num::embedding(tokens, {B, len}, embed_), std::sqrt(static_cast<Real>(d)));
  x = c.drop(num::add_broadcast(x, num::sinusoidal_positions(len, d)));
  for (std::size_t l = 0; l < dec_layers_.size(); ++l) {
    x = dec_layers_[l](x, mem.keys[l], mem.values[l], mem.lengths, c);
  }
  return num::log_softmax(out_proj_(dec_norm_(x)));
}

Tensor FamaModel::decode_step(const EncoderOutput& enc, std::span<const TokenId> prefix) {
  if (prefix.empty()) throw ValueError("decode_step: empty prefix (expected at least [bos, lang])");
  if (enc.batch() != 1) throw ShapeError("decode_step: expects a single-utterance encoder output");
  Tensor lp = decode(memory(enc), prefix, prefix.size());
  const std::size_t V = config_.vocab_size;
  std::vector<Real> last(lp.data().end() - static_cast<std::ptrdiff_t>(V), lp.data().end());
  return Tensor::from({V}, std::move(last));
}

ModelOutputs FamaModel::forward(const Tensor& features, std::span<const std::size_t> lengths,
                                std::span<const TokenId> decoder_inputs, std::size_t dec_len) {
  ModelOutputs out;
  out.enc = encode(features, lengths);
  out.ctc_src_logprobs = ctc_head(out.enc.tap_states, CtcHead::kSrc);
  out.ctc_tgt_logprobs = ctc_head(out.enc.states, CtcHead::kTgt);
  out.decoder_logprobs = decode(memory(out.enc), decoder_inputs, dec_len);
  return out;
}

}  // namespace fama::model
