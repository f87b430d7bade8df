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

#include <optional>
#include <string>

#include "fama/eval/wer.hpp"
#include "fama/eval/xrtf.hpp"
#include "json.hpp"

namespace fama::eval {

/// Fields not measured by a run stay empty and are omitted from output.
struct EvalReport {
  std::optional<WerResult> wer;
  std::optional<double> ppl_asr, ppl_st;
  std::optional<BenchResult> bench;

  nlohmann::json to_json() const;
  /// Two aligned columns, one metric per line.
  std::string table() const;
};

}  // namespace fama::eval
