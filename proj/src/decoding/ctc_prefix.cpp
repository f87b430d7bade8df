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

#include "fama/decoding/ctc_prefix.hpp"

#include <cmath>
#include <limits>

#include "fama/common.hpp"

namespace fama::decode {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double lse(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

void check(std::span<const double> lp, std::size_t frames, std::size_t vocab, std::span<const TokenId> labels,
           TokenId blank) {
  if (lp.size() != frames * vocab) throw ShapeError("ctc prefix: log-prob buffer does not match frames x vocab");
  for (TokenId c : labels) {
    if (c < 0 || static_cast<std::size_t>(c) >= vocab || c == blank) {
      throw ValueError("ctc prefix: label " + std::to_string(c) + " is blank or outside the vocabulary");
    }
  }
}

// Forward variables of `labels`: r_n[t] (path ends in the last label) and
// r_b[t] (ends in blank) after frames 0..t. Also returns, if wanted, the
// prefix probability of labels as accumulated along the way.
struct Forward {
  std::vector<double> rn, rb;
  double prefix = 0.0;  // log P(labels is a prefix)
};

Forward forward(std::span<const TokenId> labels, std::span<const double> lp, std::size_t T, std::size_t V,
                TokenId blank) {
  Forward f;
  f.rn.assign(T, kNegInf);
  f.rb.assign(T, kNegInf);
  // Empty prefix: all-blank paths.
  double acc = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    acc += lp[t * V + static_cast<std::size_t>(blank)];
    f.rb[t] = acc;
  }
  f.prefix = 0.0;
  TokenId last = -1;
  for (TokenId c : labels) {
    std::vector<double> rn(T, kNegInf), rb(T, kNegInf);
    const auto x = [&](std::size_t t) { return lp[t * V + static_cast<std::size_t>(c)]; };
    // phi[t]: mass of the shorter prefix at t that may be followed by c at t+1.
    const auto phi = [&](std::size_t t) { return c == last ? f.rb[t] : lse(f.rb[t], f.rn[t]); };
    double psi = kNegInf;
    if (T > 0) {
      rn[0] = last == -1 ? x(0) : kNegInf;
      psi = rn[0];
    }
    for (std::size_t t = 1; t < T; ++t) {
      rn[t] = lse(rn[t - 1], phi(t - 1)) + x(t);
      rb[t] = lse(rn[t - 1], rb[t - 1]) + lp[t * V + static_cast<std::size_t>(blank)];
      psi = lse(psi, phi(t - 1) + x(t));
    }
    f.rn = std::move(rn);
    f.rb = std::move(rb);
    f.prefix = psi;
    last = c;
  }
  return f;
}

}  // namespace

double ctc_sequence_score(std::span<const TokenId> labels, std::span<const double> lp, std::size_t frames,
                          std::size_t vocab, TokenId blank) {
  check(lp, frames, vocab, labels, blank);
  if (frames == 0) return labels.empty() ? 0.0 : kNegInf;
  const auto f = forward(labels, lp, frames, vocab, blank);
  return lse(f.rn[frames - 1], f.rb[frames - 1]);
}

double ctc_prefix_score(std::span<const TokenId> prefix, std::span<const double> lp, std::size_t frames,
                        std::size_t vocab, TokenId blank, TokenId eos) {
  if (!prefix.empty() && prefix.back() == eos) {
    return ctc_sequence_score(prefix.first(prefix.size() - 1), lp, frames, vocab, blank);
  }
  check(lp, frames, vocab, prefix, blank);
  if (prefix.empty()) return 0.0;
  if (frames == 0) return kNegInf;
  return forward(prefix, lp, frames, vocab, blank).prefix;
}

std::vector<TokenId> greedy_ctc(std::span<const double> lp, std::size_t frames, std::size_t vocab, TokenId blank) {
  if (lp.size() != frames * vocab) throw ShapeError("greedy_ctc: log-prob buffer does not match frames x vocab");
  std::vector<TokenId> out;
  TokenId prev = -1;
  for (std::size_t t = 0; t < frames; ++t) {
    std::size_t best = 0;
    for (std::size_t v = 1; v < vocab; ++v) {
      if (lp[t * vocab + v] > lp[t * vocab + best]) best = v;
    }
    const auto id = static_cast<TokenId>(best);
    if (id != prev && id != blank) out.push_back(id);
    prev = id;
  }
  return out;
}

}  // namespace fama::decode
