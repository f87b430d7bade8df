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

#include "fama/training/schedule.hpp"

#include <cmath>

#include "fama/common.hpp"

namespace fama::train {

double noam_lr(std::uint64_t step, double peak, std::uint64_t warmup) {
  if (warmup == 0) throw ValueError("noam_lr: warmup must be positive");
  if (step == 0) throw ValueError("noam_lr: steps are counted from 1");
  const double s = static_cast<double>(step), w = static_cast<double>(warmup);
  return peak * std::min(s / w, std::sqrt(w / s));
}

void PiecewiseNoam::validate() const {
  if (step_a == 0 || step_b <= step_a) throw ValueError("piecewise noam: need 0 < step_a < step_b");
  if (!(lr_a >= 0.0 && lr_b > 0.0)) throw ValueError("piecewise noam: learning rates must be positive");
}

double piecewise_noam_lr(std::uint64_t step, const PiecewiseNoam& cfg) {
  cfg.validate();
  if (step == 0) throw ValueError("piecewise_noam_lr: steps are counted from 1");
  const double s = static_cast<double>(step);
  const double a = static_cast<double>(cfg.step_a), b = static_cast<double>(cfg.step_b);
  if (step <= cfg.step_a) return cfg.lr_a * s / a;
  if (step <= cfg.step_b) return cfg.lr_a + (cfg.lr_b - cfg.lr_a) * (s - a) / (b - a);
  return cfg.lr_b * std::sqrt(b / s);
}

ScheduleKind parse_schedule(const std::string& name) {
  if (name == "noam") return ScheduleKind::kNoam;
  if (name == "piecewise-noam") return ScheduleKind::kPiecewiseNoam;
  if (name == "constant") return ScheduleKind::kConstant;
  throw ValueError("unknown schedule '" + name + "' (expected noam, piecewise-noam or constant)");
}

const char* schedule_name(ScheduleKind kind) {
  switch (kind) {
    case ScheduleKind::kNoam:
      return "noam";
    case ScheduleKind::kPiecewiseNoam:
      return "piecewise-noam";
    case ScheduleKind::kConstant:
      return "constant";
  }
  return "?";
}

}  // namespace fama::train
