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

#include <functional>
#include <string>
#include <vector>

#include "fama/common.hpp"
#include "fama/decoding/beam_search.hpp"
#include "fama/model/fama_model.hpp"

namespace fama::eval {

/// Seconds of audio per second of compute.
double xrtf(double audio_seconds, double compute_seconds);

struct TimingResult {
  double compute_seconds = 0.0;
  std::size_t batches = 0;
};

/// Runs batch 0 once untimed, then times run(i) for every batch.
TimingResult time_batches(std::size_t num_batches, const std::function<void(std::size_t)>& run);

struct BenchInput {
  std::string id;
  std::vector<double> samples;  // already read from disk
  Lang lang = Lang::kEn;        // output language
};

struct BenchResult {
  double xrtf = 0.0;
  double audio_seconds = 0.0;
  double compute_seconds = 0.0;
  std::size_t batch_size = 1;
  std::size_t workers = 1;
  std::vector<std::string> texts;  // per input, in order
};

/// Feature extraction, encoding and beam search over `inputs` in batches.
/// `after_batch`, when set, runs inside the timed region (harness tests).
BenchResult xrtf_bench(model::FamaModel& model, const std::vector<BenchInput>& inputs, const text::Vocabulary& vocab,
                       std::size_t batch_size, const decode::DecodeConfig& cfg,
                       const std::function<void()>& after_batch = {});

}  // namespace fama::eval
