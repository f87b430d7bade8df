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

#include "fama/model/layers.hpp"

#include <cmath>

#include "fama/numcore/ops.hpp"

namespace fama::model {

namespace {

Tensor uniform(num::Shape shape, Real bound, num::Rng& rng) {
  std::vector<Real> v(num::shape_numel(shape));
  for (Real& x : v) x = rng.uniform(-bound, bound);
  return Tensor::from(std::move(shape), std::move(v), true);
}

}  // namespace

Tensor ParamSet::add(const std::string& name, Tensor t) {
  for (const auto& [n, _] : entries_) {
    if (n == name) throw ValueError("duplicate parameter name '" + name + "'");
  }
  t.set_requires_grad(true);
  entries_.emplace_back(name, t);
  return t;
}

std::size_t ParamSet::count() const {
  std::size_t n = 0;
  for (const auto& [_, t] : entries_) n += t.numel();
  return n;
}

Tensor ForwardCtx::drop(const Tensor& x) const {
  if (!training || dropout == 0.0) return x;
  return num::dropout(x, dropout, *rng, true);
}

Linear Linear::make(ParamSet& ps, const std::string& name, std::size_t in, std::size_t out, bool bias,
                    num::Rng& rng) {
  Linear l;
  // Xavier uniform.
  const Real bound = std::sqrt(6.0 / static_cast<Real>(in + out));
  l.weight = ps.add(name + ".weight", uniform({in, out}, bound, rng));
  if (bias) l.bias = ps.add(name + ".bias", Tensor::zeros({out}));
  return l;
}

Tensor Linear::operator()(const Tensor& x) const { return num::linear(x, weight, bias); }

LayerNorm LayerNorm::make(ParamSet& ps, const std::string& name, std::size_t dim) {
  LayerNorm n;
  n.gamma = ps.add(name + ".gamma", Tensor::full({dim}, 1.0));
  n.beta = ps.add(name + ".beta", Tensor::zeros({dim}));
  return n;
}

Tensor LayerNorm::operator()(const Tensor& x) const { return num::layer_norm(x, gamma, beta); }

FeedForward FeedForward::make(ParamSet& ps, const std::string& name, std::size_t d, std::size_t ffn,
                              Activation act, num::Rng& rng) {
  FeedForward f;
  f.norm = LayerNorm::make(ps, name + ".norm", d);
  f.up = Linear::make(ps, name + ".up", d, ffn, true, rng);
  f.down = Linear::make(ps, name + ".down", ffn, d, true, rng);
  f.act = act;
  return f;
}

Tensor FeedForward::operator()(const Tensor& x, const ForwardCtx& ctx) const {
  Tensor h = up(norm(x));
  h = act == Activation::kSilu ? num::silu(h) : num::relu(h);
  return ctx.drop(down(ctx.drop(h)));
}

MultiHeadAttention MultiHeadAttention::make(ParamSet& ps, const std::string& name, std::size_t d,
                                            std::size_t heads, num::Rng& rng) {
  MultiHeadAttention m;
  m.q = Linear::make(ps, name + ".q", d, d, true, rng);
  m.k = Linear::make(ps, name + ".k", d, d, true, rng);
  m.v = Linear::make(ps, name + ".v", d, d, true, rng);
  m.out = Linear::make(ps, name + ".out", d, d, true, rng);
  m.heads = heads;
  return m;
}

Tensor MultiHeadAttention::self(const Tensor& x, std::span<const std::size_t> lengths, bool causal,
                                const ForwardCtx& ctx) const {
  Tensor a = num::attention(q(x), k(x), v(x), heads, lengths, causal);
  return ctx.drop(out(a));
}

Tensor MultiHeadAttention::cross(const Tensor& x, const Tensor& keys, const Tensor& values,
                                 std::span<const std::size_t> key_lengths, const ForwardCtx& ctx) const {
  Tensor a = num::attention(q(x), keys, values, heads, key_lengths, false);
  return ctx.drop(out(a));
}

ConvModule ConvModule::make(ParamSet& ps, const std::string& name, std::size_t d, std::size_t kernel,
                            num::Rng& rng) {
  ConvModule c;
  c.norm = LayerNorm::make(ps, name + ".norm", d);
  c.pointwise_in = Linear::make(ps, name + ".pointwise_in", d, 2 * d, true, rng);
  c.depthwise_weight =
      ps.add(name + ".depthwise.weight", uniform({kernel, d}, 1.0 / std::sqrt(static_cast<Real>(kernel)), rng));
  c.depthwise_bias = ps.add(name + ".depthwise.bias", Tensor::zeros({d}));
  c.depthwise_norm = LayerNorm::make(ps, name + ".depthwise_norm", d);
  c.pointwise_out = Linear::make(ps, name + ".pointwise_out", d, d, true, rng);
  return c;
}

Tensor ConvModule::operator()(const Tensor& x, std::span<const std::size_t> lengths, const ForwardCtx& ctx) const {
  Tensor h = num::glu(pointwise_in(norm(x)));
  h = num::mask_time(h, lengths);  // padded frames must not leak through the kernel
  h = num::depthwise_conv1d(h, depthwise_weight, depthwise_bias);
  h = num::silu(depthwise_norm(h));
  return ctx.drop(pointwise_out(h));
}

ConformerBlock ConformerBlock::make(ParamSet& ps, const std::string& name, std::size_t d, std::size_t heads,
                                    std::size_t ffn, std::size_t kernel, num::Rng& rng) {
  ConformerBlock b;
  b.ffn1 = FeedForward::make(ps, name + ".ffn1", d, ffn, Activation::kSilu, rng);
  b.attn_norm = LayerNorm::make(ps, name + ".attn_norm", d);
  b.attn = MultiHeadAttention::make(ps, name + ".attn", d, heads, rng);
  b.conv = ConvModule::make(ps, name + ".conv", d, kernel, rng);
  b.ffn2 = FeedForward::make(ps, name + ".ffn2", d, ffn, Activation::kSilu, rng);
  b.final_norm = LayerNorm::make(ps, name + ".final_norm", d);
  return b;
}

Tensor ConformerBlock::operator()(const Tensor& x, std::span<const std::size_t> lengths,
                                  const ForwardCtx& ctx) const {
  Tensor h = num::add(x, num::scale(ffn1(x, ctx), 0.5));
  h = num::add(h, attn.self(attn_norm(h), lengths, false, ctx));
  h = num::add(h, conv(h, lengths, ctx));
  h = num::add(h, num::scale(ffn2(h, ctx), 0.5));
  return num::mask_time(final_norm(h), lengths);
}

DecoderLayer DecoderLayer::make(ParamSet& ps, const std::string& name, std::size_t d, std::size_t heads,
                                std::size_t ffn, num::Rng& rng) {
  DecoderLayer l;
  l.self_norm = LayerNorm::make(ps, name + ".self_norm", d);
  l.self_attn = MultiHeadAttention::make(ps, name + ".self_attn", d, heads, rng);
  l.cross_norm = LayerNorm::make(ps, name + ".cross_norm", d);
  l.cross_attn = MultiHeadAttention::make(ps, name + ".cross_attn", d, heads, rng);
  l.ffn = FeedForward::make(ps, name + ".ffn", d, ffn, Activation::kRelu, rng);
  return l;
}

Tensor DecoderLayer::operator()(const Tensor& x, const Tensor& mem_keys, const Tensor& mem_values,
                                std::span<const std::size_t> mem_lengths, const ForwardCtx& ctx) const {
  Tensor h = num::add(x, self_attn.self(self_norm(x), {}, true, ctx));
  h = num::add(h, cross_attn.cross(cross_norm(h), mem_keys, mem_values, mem_lengths, ctx));
  return num::add(h, ffn(h, ctx));
}

}  // namespace fama::model
