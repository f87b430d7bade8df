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

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fama/numcore/tensor.hpp"

namespace fama::train {

using num::Tensor;

struct OptimizerConfig {
  double beta1 = 0.9;
  double beta2 = 0.98;
  double weight_decay = 0.001;
  double eps = 1e-8;
  void validate() const;
};

struct AdamState {
  std::vector<double> m, v;
  std::uint64_t t = 0;
  bool operator==(const AdamState&) const = default;
};

/// One decoupled-weight-decay Adam update of `theta` in place:
/// theta *= (1 - lr * wd), then theta -= lr * m_hat / (sqrt(v_hat) + eps).
void adamw_update(std::span<double> theta, std::span<const double> grad, double lr, const OptimizerConfig& cfg,
                  AdamState& state);

using NamedParams = std::vector<std::pair<std::string, Tensor>>;

/// L2 norm over every parameter gradient (missing gradients count as zero).
double grad_norm(const NamedParams& params);

/// Scales all gradients by max_norm / norm when the norm exceeds max_norm.
/// Returns the norm before clipping.
double clip_grad_norm(NamedParams& params, double max_norm);

class AdamW {
 public:
  explicit AdamW(const OptimizerConfig& cfg);

  /// Applies one update. When any gradient is non-finite nothing changes
  /// (parameters and moments alike), the skip counter grows and false is returned.
  bool step(NamedParams& params, double lr);

  std::uint64_t steps() const { return steps_; }
  std::uint64_t skipped() const { return skipped_; }
  const std::vector<AdamState>& state() const { return state_; }

 private:
  OptimizerConfig cfg_;
  std::vector<AdamState> state_;
  std::uint64_t steps_ = 0;
  std::uint64_t skipped_ = 0;
};

}  // namespace fama::train
