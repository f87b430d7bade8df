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

#include "fama/training/trainer.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "fama/log.hpp"
#include "fama/losses/cross_entropy.hpp"
#include "fama/numcore/autograd.hpp"

namespace fama::train {

using nlohmann::json;

StageConfig StageConfig::defaults(int stage) {
  StageConfig c;
  c.stage = stage;
  if (stage == 2) {
    c.schedule = ScheduleKind::kConstant;
    c.max_steps = 1000;
  }
  return c;
}

void StageConfig::validate() const {
  if (stage != 1 && stage != 2) throw ValueError("stage config: stage must be 1 or 2");
  if ((schedule == ScheduleKind::kConstant) != (stage == 2)) {
    throw ValueError("stage config: the constant schedule is used in stage 2 and only there");
  }
  if (!(p_asr >= 0.0 && p_asr <= 1.0)) throw ValueError("stage config: p_asr must lie in [0, 1]");
  if (schedule == ScheduleKind::kConstant) {
    if (!(lr_const > 0.0)) throw ValueError("stage config: lr_const must be positive");
  } else {
    if (!(lr_peak > 0.0)) throw ValueError("stage config: lr_peak must be positive");
    if (warmup_steps == 0) throw ValueError("stage config: warmup_steps must be positive");
    if (schedule == ScheduleKind::kPiecewiseNoam && warmup_steps < 2) {
      throw ValueError("stage config: piecewise-noam needs warmup_steps >= 2");
    }
  }
  if (batch_tokens == 0) throw ValueError("stage config: batch_tokens must be positive");
  if (accum == 0) throw ValueError("stage config: accum must be positive");
  if (!(clip_norm > 0.0)) throw ValueError("stage config: clip_norm must be positive");
  if (checkpoint_interval == 0) throw ValueError("stage config: checkpoint_interval must be positive");
  optim.validate();
}

double StageConfig::lr_at(std::uint64_t step) const {
  switch (schedule) {
    case ScheduleKind::kNoam:
      return noam_lr(step, lr_peak, warmup_steps);
    case ScheduleKind::kPiecewiseNoam:
      // Two linear legs: a tenth of the peak at half the warm-up, then the peak.
      return piecewise_noam_lr(step, PiecewiseNoam{lr_peak / 10.0, warmup_steps / 2, lr_peak, warmup_steps});
    case ScheduleKind::kConstant:
      return lr_const;
  }
  return lr_const;
}

json StageConfig::to_json() const {
  return json{{"stage", stage},
              {"schedule", schedule_name(schedule)},
              {"lr_peak", lr_peak},
              {"lr_const", lr_const},
              {"warmup_steps", warmup_steps},
              {"p_asr", p_asr},
              {"max_steps", max_steps},
              {"batch_tokens", batch_tokens},
              {"accum", accum},
              {"clip_norm", clip_norm},
              {"seed", seed},
              {"beta1", optim.beta1},
              {"beta2", optim.beta2},
              {"weight_decay", optim.weight_decay},
              {"eps", optim.eps},
              {"checkpoint_interval", checkpoint_interval},
              {"spec_augment", spec_augment}};
}

StageConfig StageConfig::from_json(const json& j) {
  if (!j.is_object()) throw ValueError("stage config: expected a JSON object");
  static const std::set<std::string> known{"stage",     "schedule",     "lr_peak",      "lr_const",
                                           "warmup_steps", "p_asr",     "max_steps",    "batch_tokens",
                                           "accum",     "clip_norm",    "seed",         "beta1",
                                           "beta2",     "weight_decay", "eps",          "checkpoint_interval",
                                           "spec_augment"};
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) throw ValueError("stage config: unknown key '" + key + "'");
  }
  StageConfig c = defaults(j.value("stage", 1));
  try {
    if (j.contains("schedule")) c.schedule = parse_schedule(j.at("schedule").get<std::string>());
    auto get = [&](const char* key, auto& field) {
      if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    get("lr_peak", c.lr_peak);
    get("lr_const", c.lr_const);
    get("warmup_steps", c.warmup_steps);
    get("p_asr", c.p_asr);
    get("max_steps", c.max_steps);
    get("batch_tokens", c.batch_tokens);
    get("accum", c.accum);
    get("clip_norm", c.clip_norm);
    get("seed", c.seed);
    get("beta1", c.optim.beta1);
    get("beta2", c.optim.beta2);
    get("weight_decay", c.optim.weight_decay);
    get("eps", c.optim.eps);
    get("checkpoint_interval", c.checkpoint_interval);
    get("spec_augment", c.spec_augment);
  } catch (const json::exception& e) {
    throw ValueError(std::string("stage config: ") + e.what());
  }
  c.validate();
  return c;
}

StageConfig StageConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open stage config " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ValueError("stage config " + path.string() + ": " + e.what());
  }
  return from_json(j);
}

json step_record(const StepResult& r) {
  json j{{"step", r.step},       {"lr", r.lr},           {"ce", r.loss.ce},
         {"ctc_src", r.loss.ctc_src}, {"ctc_tgt", r.loss.ctc_tgt}, {"total", r.loss.total},
         {"grad_norm", r.grad_norm}, {"wall_ms", r.wall_ms}};
  if (r.skipped) j["skipped"] = true;
  if (r.infeasible_ctc) j["infeasible_ctc"] = r.infeasible_ctc;
  // Non-finite values are written as null by the serializer.
  return j;
}

BatchStream::BatchStream(const Dataset& data, const text::Vocabulary& vocab, const StageConfig& cfg)
    : data_(data),
      vocab_(vocab),
      cfg_(cfg),
      batch_rng_(cfg.seed),
      task_rng_(cfg.seed ^ 0x5851f42d4c957f2dULL),
      aug_rng_(cfg.seed ^ 0x14057b7ef767814fULL) {
  if (data.empty()) throw ValueError("training: the manifest has no utterances");
}

Batch BatchStream::next() {
  if (pos_ == epoch_.size()) {
    epoch_ = make_batches(data_, cfg_.batch_tokens, batch_rng_);
    pos_ = 0;
  }
  const auto& idx = epoch_[pos_++];
  std::vector<Task> tasks;
  for (std::size_t i = 0; i < idx.size(); ++i) {
    tasks.push_back(cfg_.stage == 1 ? Task::kAsr : sample_task(task_rng_, cfg_.p_asr));
  }
  AugmentOptions aug;
  aug.enabled = cfg_.spec_augment;
  return collate(data_, idx, tasks, vocab_, aug, &aug_rng_);
}

Trainer::Trainer(model::FamaModel& model, const StageConfig& cfg, const loss::LossWeights& weights)
    : model_(model), cfg_(cfg), weights_(weights), opt_(cfg.optim), params_(model.params().entries()) {
  cfg_.validate();
  weights_.validate();
}

StepResult Trainer::step(std::span<const Batch> micro) {
  if (micro.empty()) throw ValueError("trainer: a step needs at least one micro-batch");
  const auto t0 = std::chrono::steady_clock::now();
  StepResult r;
  r.step = ++step_;
  r.lr = cfg_.lr_at(r.step);

  loss::LossNormalizer norm;
  for (const auto& b : micro) {
    norm.ce_tokens += static_cast<double>(loss::count_tokens(b.targets.decoder_targets));
    norm.sequences += static_cast<double>(b.targets.batch);
  }
  model_.zero_grad();
  const bool was_training = model_.training();
  model_.set_training(true);
  bool finite = true;
  for (const auto& b : micro) {
    auto out = model_.forward(b.features, b.lengths, b.targets.decoder_inputs, b.targets.dec_len);
    loss::LossInputs in{out.decoder_logprobs, out.ctc_src_logprobs, out.ctc_tgt_logprobs, out.enc.lengths};
    auto l = loss::combined_loss(in, b.targets, weights_, norm);
    r.loss.ce += l.breakdown.ce;
    r.loss.ctc_src += l.breakdown.ctc_src;
    r.loss.ctc_tgt += l.breakdown.ctc_tgt;
    r.loss.token_count += l.breakdown.token_count;
    r.infeasible_ctc += l.infeasible_ctc;
    if (!std::isfinite(l.breakdown.total)) {
      finite = false;
      break;
    }
    num::backward(l.total);
  }
  model_.set_training(was_training);
  r.loss.total = loss::combine(weights_, r.loss.ce, r.loss.ctc_src, r.loss.ctc_tgt);

  if (finite) {
    r.grad_norm = clip_grad_norm(params_, cfg_.clip_norm);
    r.skipped = !opt_.step(params_, r.lr);
  } else {
    r.skipped = true;
    r.grad_norm = std::nan("");
  }
  if (r.skipped) warn("training: step " + std::to_string(r.step) + " skipped (non-finite loss or gradient)");
  model_.zero_grad();
  r.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

namespace {

std::filesystem::path save_at(const model::FamaModel& model, const text::Vocabulary& vocab, const StageConfig& cfg,
                              std::uint64_t step, const std::filesystem::path& dir) {
  auto ckpt = model::make_checkpoint(model, vocab, step, cfg.stage_tag());
  ckpt.extra["stage_config"] = cfg.to_json();
  auto path = dir / ("checkpoint_" + std::to_string(step) + ".ckpt");
  model::save_checkpoint(ckpt, path);
  return path;
}

}  // namespace

TrainSummary train_stage(const Dataset& data, model::FamaModel& model, const text::Vocabulary& vocab,
                         const StageConfig& cfg, const std::filesystem::path& out_dir, const StepCallback& on_step) {
  cfg.validate();
  if (data.empty()) throw ValueError("training: the manifest has no utterances");
  if (model.config().vocab_size != vocab.size()) {
    throw ValueError("training: model vocabulary (" + std::to_string(model.config().vocab_size) +
                     ") and token inventory (" + std::to_string(vocab.size()) + ") differ");
  }
  std::filesystem::create_directories(out_dir);
  TrainSummary s;
  s.metrics_log = out_dir / "metrics.jsonl";
  std::ofstream log(s.metrics_log, std::ios::trunc);
  if (!log) throw IoError("cannot write metrics log " + s.metrics_log.string());

  model.reseed_dropout(cfg.seed ^ 0xd1b54a32d192ed03ULL);
  BatchStream stream(data, vocab, cfg);
  Trainer trainer(model, cfg);
  if (cfg.max_steps == 0) {
    s.final_checkpoint = save_at(model, vocab, cfg, 0, out_dir);
    s.checkpoints.push_back(s.final_checkpoint);
    return s;
  }
  std::vector<Batch> micro(cfg.accum);
  for (std::uint64_t i = 0; i < cfg.max_steps; ++i) {
    for (auto& b : micro) b = stream.next();
    StepResult r = trainer.step(micro);
    log << step_record(r).dump() << '\n';
    log.flush();
    s.steps = r.step;
    if (r.skipped) ++s.skipped;
    s.last = r;
    const bool stop = on_step && !on_step(r);
    if (r.step % cfg.checkpoint_interval == 0 || r.step == cfg.max_steps || stop) {
      s.checkpoints.push_back(save_at(model, vocab, cfg, r.step, out_dir));
    }
    if (stop) break;
  }
  s.final_checkpoint = s.checkpoints.back();
  return s;
}

}  // namespace fama::train
