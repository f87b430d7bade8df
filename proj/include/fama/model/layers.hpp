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
#include <utility>
#include <vector>

#include "fama/numcore/random.hpp"
#include "fama/numcore/tensor.hpp"

namespace fama::model {

using num::Real;
using num::Tensor;

/// Ordered registry of named trainable tensors.
class ParamSet {
 public:
  Tensor add(const std::string& name, Tensor t);
  const std::vector<std::pair<std::string, Tensor>>& entries() const { return entries_; }
  std::vector<std::pair<std::string, Tensor>>& entries() { return entries_; }
  std::size_t count() const;

 private:
  std::vector<std::pair<std::string, Tensor>> entries_;
};

/// Per-forward settings: dropout is drawn from `rng` only when training.
struct ForwardCtx {
  bool training = false;
  Real dropout = 0.0;
  num::Rng* rng = nullptr;

  Tensor drop(const Tensor& x) const;
};

struct Linear {
  Tensor weight;  // [in, out]
  Tensor bias;    // [out] or undefined
  static Linear make(ParamSet& ps, const std::string& name, std::size_t in, std::size_t out, bool bias,
                     num::Rng& rng);
  Tensor operator()(const Tensor& x) const;
};

struct LayerNorm {
  Tensor gamma, beta;
  static LayerNorm make(ParamSet& ps, const std::string& name, std::size_t dim);
  Tensor operator()(const Tensor& x) const;
};

enum class Activation { kSilu, kRelu };

/// LayerNorm -> Linear -> activation -> dropout -> Linear -> dropout.
struct FeedForward {
  LayerNorm norm;
  Linear up, down;
  Activation act = Activation::kSilu;
  static FeedForward make(ParamSet& ps, const std::string& name, std::size_t d, std::size_t ffn, Activation act,
                          num::Rng& rng);
  Tensor operator()(const Tensor& x, const ForwardCtx& ctx) const;
};

/// Projections around the fused attention op. Input is not normalised here.
struct MultiHeadAttention {
  Linear q, k, v, out;
  std::size_t heads = 1;
  static MultiHeadAttention make(ParamSet& ps, const std::string& name, std::size_t d, std::size_t heads,
                                 num::Rng& rng);
  Tensor self(const Tensor& x, std::span<const std::size_t> lengths, bool causal, const ForwardCtx& ctx) const;
  /// Attention over precomputed keys and values.
  Tensor cross(const Tensor& x, const Tensor& keys, const Tensor& values, std::span<const std::size_t> key_lengths,
               const ForwardCtx& ctx) const;
};

/// LayerNorm -> pointwise (2d) -> GLU -> depthwise conv -> LayerNorm -> SiLU -> pointwise -> dropout.
struct ConvModule {
  LayerNorm norm;
  Linear pointwise_in;
  Tensor depthwise_weight, depthwise_bias;
  LayerNorm depthwise_norm;
  Linear pointwise_out;
  static ConvModule make(ParamSet& ps, const std::string& name, std::size_t d, std::size_t kernel, num::Rng& rng);
  Tensor operator()(const Tensor& x, std::span<const std::size_t> lengths, const ForwardCtx& ctx) const;
};

/// Macaron block: half FFN, self-attention, convolution, half FFN, LayerNorm.
struct ConformerBlock {
  FeedForward ffn1;
  LayerNorm attn_norm;
  MultiHeadAttention attn;
  ConvModule conv;
  FeedForward ffn2;
  LayerNorm final_norm;
  static ConformerBlock make(ParamSet& ps, const std::string& name, std::size_t d, std::size_t heads,
                             std::size_t ffn, std::size_t kernel, num::Rng& rng);
  Tensor operator()(const Tensor& x, std::span<const std::size_t> lengths, const ForwardCtx& ctx) const;
};

/// Pre-norm Transformer decoder layer.
struct DecoderLayer {
  LayerNorm self_norm;
  MultiHeadAttention self_attn;
  LayerNorm cross_norm;
  MultiHeadAttention cross_attn;
  FeedForward ffn;
  static DecoderLayer make(ParamSet& ps, const std::string& name, std::size_t d, std::size_t heads,
                           std::size_t ffn, num::Rng& rng);
  Tensor operator()(const Tensor& x, const Tensor& mem_keys, const Tensor& mem_values,
                    std::span<const std::size_t> mem_lengths, const ForwardCtx& ctx) const;
};

}  // namespace fama::model
