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

#include "fama/training/forgetting_probe.hpp"

#include <cstdio>
#include <sstream>

#include "fama/eval/perplexity.hpp"

namespace fama::train {

ProbeReport forgetting_probe(const model::Checkpoint& pretrained, const Dataset& train, const Dataset& valid,
                             const ProbeConfig& cfg) {
  if (valid.empty()) throw ValueError("forgetting probe: the validation set is empty");
  if (train.empty()) throw ValueError("forgetting probe: the training set is empty");
  if (cfg.variants.empty()) throw ValueError("forgetting probe: no variants given");
  if (cfg.eval_interval == 0) throw ValueError("forgetting probe: eval_interval must be positive");
  const auto vocab = model::vocabulary_from_checkpoint(pretrained);
  ProbeReport report;
  for (const auto& v : cfg.variants) {
    StageConfig sc = cfg.stage;
    sc.stage = 2;
    sc.schedule = ScheduleKind::kConstant;
    sc.lr_const = v.lr;
    sc.p_asr = v.p_asr;
    sc.max_steps = cfg.steps;
    sc.validate();

    auto model = model::model_from_checkpoint(pretrained);
    model.reseed_dropout(sc.seed ^ 0xd1b54a32d192ed03ULL);
    ProbeTrajectory traj;
    traj.variant = v;
    auto measure = [&](std::uint64_t step) {
      traj.points.push_back({step, eval::perplexity(model, valid, Task::kAsr, vocab).ppl,
                             eval::perplexity(model, valid, Task::kSt, vocab).ppl});
    };
    measure(0);
    BatchStream stream(train, vocab, sc);
    Trainer trainer(model, sc);
    std::vector<Batch> micro(sc.accum);
    for (std::uint64_t s = 1; s <= cfg.steps; ++s) {
      for (auto& b : micro) b = stream.next();
      trainer.step(micro);
      if (s % cfg.eval_interval == 0 || s == cfg.steps) measure(s);
    }
    report.runs.push_back(std::move(traj));
  }
  return report;
}

std::string ProbeReport::table() const {
  std::ostringstream os;
  char line[160];
  std::snprintf(line, sizeof line, "%-10s %-6s %8s %12s %12s %12s %12s\n", "lr", "p_asr", "steps", "asr_ppl_0",
                "asr_ppl_end", "st_ppl_0", "st_ppl_end");
  os << line;
  for (const auto& r : runs) {
    const auto& a = r.points.front();
    const auto& b = r.points.back();
    std::snprintf(line, sizeof line, "%-10.3g %-6.2f %8llu %12.4f %12.4f %12.4f %12.4f\n", r.variant.lr,
                  r.variant.p_asr, static_cast<unsigned long long>(b.step), a.ppl_asr, b.ppl_asr, a.ppl_st, b.ppl_st);
    os << line;
  }
  return os.str();
}

std::string ProbeReport::series() const {
  std::ostringstream os;
  os << "lr\tp_asr\tstep\tppl_asr\tppl_st\n";
  os.precision(10);
  for (const auto& r : runs) {
    for (const auto& p : r.points) {
      os << r.variant.lr << '\t' << r.variant.p_asr << '\t' << p.step << '\t' << p.ppl_asr << '\t' << p.ppl_st << '\n';
    }
  }
  return os.str();
}

nlohmann::json ProbeReport::to_json() const {
  auto j = nlohmann::json::array();
  for (const auto& r : runs) {
    auto pts = nlohmann::json::array();
    for (const auto& p : r.points) pts.push_back({{"step", p.step}, {"ppl_asr", p.ppl_asr}, {"ppl_st", p.ppl_st}});
    j.push_back({{"lr", r.variant.lr}, {"p_asr", r.variant.p_asr}, {"points", pts}});
  }
  return j;
}

}  // namespace fama::train
