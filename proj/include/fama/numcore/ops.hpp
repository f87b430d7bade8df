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

// Differentiable op inventory. Every op computes its output shape before
// touching data and throws ShapeError naming the op and the offending shapes
// when inputs do not conform. Broadcasting is limited to "suffix" operands
// (bias over the trailing axis, positional table over [T, D]).

#include <cstdint>
#include <span>
#include <vector>

#include "fama/numcore/random.hpp"
#include "fama/numcore/tensor.hpp"

namespace fama::num {

Tensor reshape(const Tensor& x, Shape shape);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, Real factor);

/// x + y where y's shape equals a trailing suffix of x's shape.
Tensor add_broadcast(const Tensor& x, const Tensor& y);

/// [..., K] x [K, N] -> [..., N]; leading axes of `a` are flattened.
Tensor matmul(const Tensor& a, const Tensor& b);

/// matmul plus optional bias [N]; pass an undefined bias to skip it.
Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias);

/// Output length of a symmetric-padded (kernel / 2) 1D convolution.
std::size_t conv_out_length(std::size_t length, std::size_t kernel, std::size_t stride);

/// x [B, T, Cin], weight [K, Cin, Cout], bias [Cout] -> [B, T', Cout] with
/// T' = conv_out_length(T, K, stride).
Tensor conv1d(const Tensor& x, const Tensor& weight, const Tensor& bias, std::size_t stride);

/// x [B, T, C], weight [K, C], bias [C] -> [B, T, C]; stride 1, same padding.
Tensor depthwise_conv1d(const Tensor& x, const Tensor& weight, const Tensor& bias);

/// Normalizes over the trailing axis; gamma and beta are [D].
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, Real eps = 1e-5);

Tensor softmax(const Tensor& x);
Tensor log_softmax(const Tensor& x);
Tensor silu(const Tensor& x);
Tensor relu(const Tensor& x);

/// Splits the trailing axis into halves (a, b) and returns a * sigmoid(b).
Tensor glu(const Tensor& x);

/// ids laid out as `id_shape`; table [V, D] -> id_shape + [D].
Tensor embedding(std::span<const std::int32_t> ids, const Shape& id_shape, const Tensor& table);

/// Sinusoidal absolute positions, [length, dim]. Constant (no gradient).
Tensor sinusoidal_positions(std::size_t length, std::size_t dim);

/// Multi-head scaled dot-product attention. q [B, Tq, D]; k, v [B, Tk, D].
/// Keys at or beyond key_lengths[b] are excluded (empty = all valid); with
/// `causal`, query i only sees keys j <= i.
Tensor attention(const Tensor& q, const Tensor& k, const Tensor& v, std::size_t heads,
                 std::span<const std::size_t> key_lengths, bool causal);

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);

/// Scalar element at a flat index.
Tensor select(const Tensor& x, std::size_t flat_index);

/// Left-to-right weighted sum of scalars: ((w0*t0 + w1*t1) + w2*t2) ...
Tensor weighted_sum(std::span<const Tensor> terms, std::span<const Real> weights);

/// Inverted dropout; identity when !training or p == 0.
Tensor dropout(const Tensor& x, Real p, Rng& rng, bool training);

/// x [B, T, ...]: positions t >= lengths[b] are replaced by `value` and
/// receive no gradient.
Tensor mask_time(const Tensor& x, std::span<const std::size_t> lengths, Real value = 0.0);

}  // namespace fama::num
