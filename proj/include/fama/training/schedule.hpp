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
#include <string>

namespace fama::train {

/// peak * min(step / warmup, sqrt(warmup / step)); step >= 1.
double noam_lr(std::uint64_t step, double peak, std::uint64_t warmup);

/// Linear 0 -> lr_a over [0, step_a], linear lr_a -> lr_b over [step_a, step_b],
/// then lr_b * sqrt(step_b / step).
struct PiecewiseNoam {
  double lr_a = 2e-5;
  std::uint64_t step_a = 25000;
  double lr_b = 2e-4;
  std::uint64_t step_b = 50000;
  void validate() const;
};

double piecewise_noam_lr(std::uint64_t step, const PiecewiseNoam& cfg = {});

enum class ScheduleKind { kNoam, kPiecewiseNoam, kConstant };

ScheduleKind parse_schedule(const std::string& name);
const char* schedule_name(ScheduleKind kind);

}  // namespace fama::train
