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

#include "fama/losses/ctc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include "fama/numcore/autograd.hpp"

namespace fama::loss {

namespace {

constexpr Real kNegInf = -std::numeric_limits<Real>::infinity();

inline Real log_add(Real a, Real b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const Real m = std::max(a, b);
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

void check_args(std::size_t frames, std::size_t vocab, std::size_t values, std::span<const TokenId> target,
                TokenId blank) {
  if (values != frames * vocab) {
    throw ShapeError("ctc: " + std::to_string(values) + " log-probs for " + std::to_string(frames) + "x" +
                     std::to_string(vocab));
  }
  if (blank < 0 || static_cast<std::size_t>(blank) >= vocab) throw ValueError("ctc: blank id outside vocabulary");
  for (TokenId id : target) {
    if (id < 0 || static_cast<std::size_t>(id) >= vocab) {
      throw ValueError("ctc: target id " + std::to_string(id) + " outside vocabulary of " + std::to_string(vocab));
    }
    if (id == blank) throw ValueError("ctc: target contains the blank id");
  }
}

// Extended label sequence: blank, l1, blank, l2, ..., blank.
std::vector<TokenId> extend(std::span<const TokenId> target, TokenId blank) {
  std::vector<TokenId> ext(2 * target.size() + 1, blank);
  for (std::size_t i = 0; i < target.size(); ++i) ext[2 * i + 1] = target[i];
  return ext;
}

// alpha[t * S + s], emissions included.
std::vector<Real> forward_vars(std::span<const Real> lp, std::size_t frames, std::size_t vocab,
                               const std::vector<TokenId>& ext) {
  const std::size_t S = ext.size();
  std::vector<Real> alpha(frames * S, kNegInf);
  alpha[0] = lp[static_cast<std::size_t>(ext[0])];
  if (S > 1) alpha[1] = lp[static_cast<std::size_t>(ext[1])];
  for (std::size_t t = 1; t < frames; ++t) {
    const Real* prev = alpha.data() + (t - 1) * S;
    Real* cur = alpha.data() + t * S;
    const Real* row = lp.data() + t * vocab;
    // Only states that can still reach the end matter, but the full sweep is cheap here.
    for (std::size_t s = 0; s < S; ++s) {
      Real a = prev[s];
      if (s >= 1) a = log_add(a, prev[s - 1]);
      if (s >= 2 && ext[s] != ext[s - 2]) a = log_add(a, prev[s - 2]);
      cur[s] = a == kNegInf ? kNegInf : a + row[static_cast<std::size_t>(ext[s])];
    }
  }
  return alpha;
}

Real total_log_prob(const std::vector<Real>& alpha, std::size_t frames, std::size_t S) {
  const Real* last = alpha.data() + (frames - 1) * S;
  return S > 1 ? log_add(last[S - 1], last[S - 2]) : last[S - 1];
}

}  // namespace

std::size_t ctc_min_frames(std::span<const TokenId> target) {
  std::size_t n = target.size();
  for (std::size_t i = 1; i < target.size(); ++i) n += target[i] == target[i - 1];
  return n;
}

CtcResult ctc_nll(std::span<const Real> logprobs, std::size_t frames, std::size_t vocab,
                  std::span<const TokenId> target, TokenId blank) {
  check_args(frames, vocab, logprobs.size(), target, blank);
  if (frames == 0 || frames < ctc_min_frames(target)) return {std::numeric_limits<Real>::infinity(), false};
  const auto ext = extend(target, blank);
  const auto alpha = forward_vars(logprobs, frames, vocab, ext);
  return {-total_log_prob(alpha, frames, ext.size()), true};
}

CtcResult ctc_nll_grad(std::span<const Real> logprobs, std::size_t frames, std::size_t vocab,
                       std::span<const TokenId> target, std::span<Real> grad, TokenId blank) {
  check_args(frames, vocab, logprobs.size(), target, blank);
  if (grad.size() != logprobs.size()) throw ShapeError("ctc: gradient buffer size mismatch");
  std::fill(grad.begin(), grad.end(), 0.0);
  if (frames == 0 || frames < ctc_min_frames(target)) return {std::numeric_limits<Real>::infinity(), false};
  const auto ext = extend(target, blank);
  const std::size_t S = ext.size();
  const auto alpha = forward_vars(logprobs, frames, vocab, ext);
  const Real log_p = total_log_prob(alpha, frames, S);

  // beta[t * S + s]: log-prob of frames t+1.. given state s at t (emission at t excluded).
  std::vector<Real> beta(frames * S, kNegInf);
  beta[(frames - 1) * S + S - 1] = 0.0;
  if (S > 1) beta[(frames - 1) * S + S - 2] = 0.0;
  for (std::size_t t = frames - 1; t-- > 0;) {
    const Real* next = beta.data() + (t + 1) * S;
    const Real* row = logprobs.data() + (t + 1) * vocab;
    Real* cur = beta.data() + t * S;
    for (std::size_t s = 0; s < S; ++s) {
      Real b = next[s] + row[static_cast<std::size_t>(ext[s])];
      if (s + 1 < S) b = log_add(b, next[s + 1] + row[static_cast<std::size_t>(ext[s + 1])]);
      if (s + 2 < S && ext[s + 2] != ext[s]) b = log_add(b, next[s + 2] + row[static_cast<std::size_t>(ext[s + 2])]);
      cur[s] = b;
    }
  }
  // d(-log P) / d lp[t, k] = -occupancy of label k at frame t.
  std::vector<Real> occ(vocab);
  for (std::size_t t = 0; t < frames; ++t) {
    std::fill(occ.begin(), occ.end(), kNegInf);
    for (std::size_t s = 0; s < S; ++s) {
      const Real v = alpha[t * S + s] + beta[t * S + s];
      if (v != kNegInf) occ[static_cast<std::size_t>(ext[s])] = log_add(occ[static_cast<std::size_t>(ext[s])], v);
    }
    for (std::size_t k = 0; k < vocab; ++k) {
      if (occ[k] != kNegInf) grad[t * vocab + k] = -std::exp(occ[k] - log_p);
    }
  }
  return {-log_p, true};
}

CtcLoss ctc_loss(const Tensor& logprobs, std::span<const TokenId> target, std::size_t input_len, TokenId blank) {
  if (logprobs.rank() != 2) throw ShapeError("ctc_loss: expected logprobs [T,V], got " + num::shape_str(logprobs.shape()));
  const std::size_t T = logprobs.dim(0), V = logprobs.dim(1);
  if (input_len > T) {
    throw ShapeError("ctc_loss: input length " + std::to_string(input_len) + " exceeds " + std::to_string(T) + " frames");
  }
  const auto lp = logprobs.data().first(input_len * V);
  const bool want = num::detail::needs_grad({&logprobs});
  CtcLoss result;
  if (!want) {
    const auto r = ctc_nll(lp, input_len, V, target, blank);
    result.loss = Tensor::scalar(r.nll);
    result.feasible = r.feasible;
    return result;
  }
  auto grad = std::make_shared<std::vector<Real>>(input_len * V, 0.0);
  const auto r = ctc_nll_grad(lp, input_len, V, target, *grad, blank);
  result.loss = Tensor::scalar(r.nll);
  result.feasible = r.feasible;
  if (r.feasible) {
    num::detail::record(result.loss, "ctc_loss", {&logprobs},
                        [grad](std::span<const Real> g, num::detail::GradSink& sink) {
                          auto gx = sink[0];
                          for (std::size_t i = 0; i < grad->size(); ++i) gx[i] += g[0] * (*grad)[i];
                        });
  }
  return result;
}

CtcBatchLoss ctc_loss_batch(const Tensor& logprobs, std::span<const std::size_t> lengths,
                            const std::vector<std::vector<TokenId>>& targets, TokenId blank) {
  if (logprobs.rank() != 3 || lengths.size() != logprobs.dim(0) || targets.size() != logprobs.dim(0)) {
    throw ShapeError("ctc_loss_batch: expected logprobs [B,T,V] with B lengths and targets, got " +
                     num::shape_str(logprobs.shape()) + " with " + std::to_string(lengths.size()) + " lengths, " +
                     std::to_string(targets.size()) + " targets");
  }
  const std::size_t B = logprobs.dim(0), T = logprobs.dim(1), V = logprobs.dim(2);
  const bool want = num::detail::needs_grad({&logprobs});
  auto grad = want ? std::make_shared<std::vector<Real>>(B * T * V, 0.0) : nullptr;
  CtcBatchLoss out;
  std::vector<Real> row_grad;
  auto lp = logprobs.data();
  for (std::size_t b = 0; b < B; ++b) {
    if (lengths[b] > T) {
      throw ShapeError("ctc_loss_batch: length " + std::to_string(lengths[b]) + " exceeds " + std::to_string(T) +
                       " frames");
    }
    const auto row = lp.subspan(b * T * V, lengths[b] * V);
    const Real norm = 1.0 / static_cast<Real>(std::max<std::size_t>(targets[b].size(), 1));
    CtcResult r;
    if (want) {
      row_grad.assign(row.size(), 0.0);
      r = ctc_nll_grad(row, lengths[b], V, targets[b], row_grad, blank);
      if (r.feasible) {
        for (std::size_t i = 0; i < row_grad.size(); ++i) (*grad)[b * T * V + i] = row_grad[i] * norm;
      }
    } else {
      r = ctc_nll(row, lengths[b], V, targets[b], blank);
    }
    if (!r.feasible) {
      ++out.infeasible;
      continue;
    }
    ++out.feasible;
    out.value_sum += r.nll * norm;
  }
  out.sum = Tensor::scalar(out.value_sum);
  if (want) {
    num::detail::record(out.sum, "ctc_loss_batch", {&logprobs},
                        [grad](std::span<const Real> g, num::detail::GradSink& sink) {
                          auto gx = sink[0];
                          for (std::size_t i = 0; i < grad->size(); ++i) gx[i] += g[0] * (*grad)[i];
                        });
  }
  return out;
}

}  // namespace fama::loss
