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

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fama/frontend/spec_augment.hpp"
#include "fama/losses/combined.hpp"
#include "fama/model/checkpoint.hpp"
#include "fama/model/fama_model.hpp"
#include "fama/training/data.hpp"
#include "fama/training/optimizer.hpp"
#include "fama/training/schedule.hpp"
#include "json.hpp"

namespace fama::train {

/// Stage 1 trains on transcripts only; stage 2 samples ASR or ST targets.
/// Full-scale runs use 1M steps; the defaults below are desk sized.
struct StageConfig {
  int stage = 1;
  ScheduleKind schedule = ScheduleKind::kNoam;
  double lr_peak = 2e-3;
  double lr_const = 1e-4;
  std::uint64_t warmup_steps = 25000;
  double p_asr = 0.5;
  std::uint64_t max_steps = 2000;
  std::size_t batch_tokens = 10000;
  std::size_t accum = 1;
  double clip_norm = 10.0;
  std::uint64_t seed = 0;
  OptimizerConfig optim;
  std::uint64_t checkpoint_interval = 1000;
  bool spec_augment = true;

  static StageConfig defaults(int stage);
  void validate() const;
  double lr_at(std::uint64_t step) const;
  std::string stage_tag() const { return stage == 1 ? "asr" : "asr+st"; }

  nlohmann::json to_json() const;
  /// Missing keys keep the stage defaults; unknown keys are rejected.
  static StageConfig from_json(const nlohmann::json& j);
  static StageConfig load(const std::filesystem::path& path);
};

struct StepResult {
  std::uint64_t step = 0;
  double lr = 0.0;
  loss::LossBreakdown loss;
  double grad_norm = 0.0;
  bool skipped = false;
  std::size_t infeasible_ctc = 0;
  double wall_ms = 0.0;
};

nlohmann::json step_record(const StepResult& r);

/// Endless stream of micro-batches: epochs of token-budget batches with
/// per-utterance task sampling and optional augmentation.
class BatchStream {
 public:
  BatchStream(const Dataset& data, const text::Vocabulary& vocab, const StageConfig& cfg);
  Batch next();

 private:
  const Dataset& data_;
  const text::Vocabulary& vocab_;
  StageConfig cfg_;
  num::Rng batch_rng_, task_rng_, aug_rng_;
  std::vector<std::vector<std::size_t>> epoch_;
  std::size_t pos_ = 0;
};

class Trainer {
 public:
  Trainer(model::FamaModel& model, const StageConfig& cfg, const loss::LossWeights& weights = {});

  /// One optimizer update over `micro` (gradient accumulation). Loss terms
  /// share denominators across all micro-batches so the update matches a
  /// single batch holding the same utterances.
  StepResult step(std::span<const Batch> micro);

  std::uint64_t steps_done() const { return step_; }
  const AdamW& optimizer() const { return opt_; }

 private:
  model::FamaModel& model_;
  StageConfig cfg_;
  loss::LossWeights weights_;
  AdamW opt_;
  NamedParams params_;
  std::uint64_t step_ = 0;
};

struct TrainSummary {
  std::uint64_t steps = 0;
  std::uint64_t skipped = 0;
  std::filesystem::path final_checkpoint;
  std::filesystem::path metrics_log;
  std::vector<std::filesystem::path> checkpoints;
  std::optional<StepResult> last;
};

/// Called after every step; returning false stops training early.
using StepCallback = std::function<bool(const StepResult&)>;

/// Runs cfg.max_steps updates, appending one record per step to
/// out_dir/metrics.jsonl and writing out_dir/checkpoint_<step>.ckpt every
/// checkpoint_interval steps and at the end (step 0 when max_steps is 0).
TrainSummary train_stage(const Dataset& data, model::FamaModel& model, const text::Vocabulary& vocab,
                         const StageConfig& cfg, const std::filesystem::path& out_dir,
                         const StepCallback& on_step = {});

}  // namespace fama::train
