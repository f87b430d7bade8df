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

#include <cstddef>

#include "fama/common.hpp"
#include "fama/model/fama_model.hpp"
#include "fama/training/data.hpp"

namespace fama::eval {

struct PerplexityResult {
  double ppl = 0.0;
  double nll = 0.0;  // summed over tokens, nats
  std::size_t tokens = 0;
};

/// Teacher-forced decoder perplexity on the task's gold targets: exp of the
/// unsmoothed per-token cross-entropy, pads excluded. Runs without dropout.
/// ST over entries lacking a translation is rejected.
PerplexityResult perplexity(model::FamaModel& model, const train::Dataset& data, Task task,
                            const text::Vocabulary& vocab, std::size_t batch_size = 8);

}  // namespace fama::eval
