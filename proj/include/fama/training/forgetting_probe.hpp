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

#include <filesystem>
#include <string>
#include <vector>

#include "fama/model/checkpoint.hpp"
#include "fama/training/data.hpp"
#include "fama/training/trainer.hpp"

namespace fama::train {

struct ProbeVariant {
  double lr = 1e-4;
  double p_asr = 0.5;
};

struct ProbeConfig {
  std::vector<ProbeVariant> variants;
  std::uint64_t steps = 500;
  std::uint64_t eval_interval = 50;
  StageConfig stage = StageConfig::defaults(2);  // lr_const and p_asr come from each variant
};

struct ProbePoint {
  std::uint64_t step = 0;
  double ppl_asr = 0.0;
  double ppl_st = 0.0;
};

struct ProbeTrajectory {
  ProbeVariant variant;
  std::vector<ProbePoint> points;  // first point is the pretrained model
};

struct ProbeReport {
  std::vector<ProbeTrajectory> runs;
  std::string table() const;
  /// Tab-separated: lr, p_asr, step, ppl_asr, ppl_st.
  std::string series() const;
  nlohmann::json to_json() const;
};

/// Continues the pretrained checkpoint with stage-2 training once per
/// variant, recording validation ASR and ST perplexity every eval_interval
/// steps and at the end.
ProbeReport forgetting_probe(const model::Checkpoint& pretrained, const Dataset& train, const Dataset& valid,
                             const ProbeConfig& cfg);

}  // namespace fama::train
