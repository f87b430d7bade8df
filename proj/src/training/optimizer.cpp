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

#include "fama/training/optimizer.hpp"

#include <cmath>

#include "fama/common.hpp"

namespace fama::train {

void OptimizerConfig::validate() const {
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) {
    throw ValueError("optimizer: betas must lie in [0, 1)");
  }
  if (!(weight_decay >= 0.0)) throw ValueError("optimizer: weight_decay must be non-negative");
  if (!(eps > 0.0)) throw ValueError("optimizer: eps must be positive");
}

void adamw_update(std::span<double> theta, std::span<const double> grad, double lr, const OptimizerConfig& cfg,
                  AdamState& state) {
  if (!grad.empty() && grad.size() != theta.size()) throw ShapeError("adamw: gradient and parameter sizes differ");
  if (state.m.size() != theta.size()) {
    state.m.assign(theta.size(), 0.0);
    state.v.assign(theta.size(), 0.0);
  }
  ++state.t;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  const double decay = 1.0 - lr * cfg.weight_decay;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double g = grad.empty() ? 0.0 : grad[i];
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g * g;
    const double m_hat = state.m[i] / bc1;
    const double v_hat = state.v[i] / bc2;
    theta[i] = theta[i] * decay - lr * (m_hat / (std::sqrt(v_hat) + cfg.eps));
  }
}

double grad_norm(const NamedParams& params) {
  double sq = 0.0;
  for (const auto& [_, p] : params) {
    for (double g : p.grad()) sq += g * g;
  }
  return std::sqrt(sq);
}

double clip_grad_norm(NamedParams& params, double max_norm) {
  const double norm = grad_norm(params);
  if (norm > max_norm && norm > 0.0) {
    const double s = max_norm / norm;
    for (auto& [_, p] : params) {
      if (p.grad().empty()) continue;
      for (double& g : p.mutable_grad()) g *= s;
    }
  }
  return norm;
}

AdamW::AdamW(const OptimizerConfig& cfg) : cfg_(cfg) { cfg_.validate(); }

bool AdamW::step(NamedParams& params, double lr) {
  for (const auto& [_, p] : params) {
    for (double g : p.grad()) {
      if (!std::isfinite(g)) {
        ++skipped_;
        return false;
      }
    }
  }
  if (state_.size() != params.size()) state_.resize(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params[i].second;
    adamw_update(p.data(), p.grad(), lr, cfg_, state_[i]);
  }
  ++steps_;
  return true;
}

}  // namespace fama::train
