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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "fama/log.hpp"
#include "fama/model/checkpoint.hpp"
#include "fama/training/averaging.hpp"
#include "fama/training/data.hpp"
#include "fama/training/forgetting_probe.hpp"
#include "fama/training/optimizer.hpp"
#include "fama/training/schedule.hpp"
#include "fama/training/trainer.hpp"
#include "test_util.hpp"

using namespace fama;
using namespace fama::train;
namespace fs = std::filesystem;

namespace {

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("fama_training_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// Reference Adam with decoupled decay, written out step by step.
struct RefAdam {
  std::vector<double> m, v;
  int t = 0;
  void step(std::vector<double>& th, const std::vector<double>& g, double lr, double b1, double b2, double wd,
            double eps) {
    if (m.empty()) m.assign(th.size(), 0.0), v.assign(th.size(), 0.0);
    ++t;
    for (std::size_t i = 0; i < th.size(); ++i) {
      m[i] = b1 * m[i] + (1 - b1) * g[i];
      v[i] = b2 * v[i] + (1 - b2) * g[i] * g[i];
      const double mh = m[i] / (1 - std::pow(b1, t));
      const double vh = v[i] / (1 - std::pow(b2, t));
      th[i] = th[i] * (1 - lr * wd) - lr * mh / (std::sqrt(vh) + eps);
    }
  }
};

NamedParams one_param(std::vector<double> value, std::vector<double> grad) {
  const std::size_t n = value.size();
  auto t = num::Tensor::from({n}, std::move(value), true);
  auto g = t.mutable_grad();
  std::copy(grad.begin(), grad.end(), g.begin());
  return {{"p", t}};
}

}  // namespace

TEST_CASE("noam and piecewise schedules") {
  CHECK(rel(noam_lr(25000, 2e-3, 25000), 2e-3) <= 1e-12);
  CHECK(rel(noam_lr(12500, 2e-3, 25000), 1e-3) <= 1e-12);
  CHECK(rel(noam_lr(100000, 2e-3, 25000), 1e-3) <= 1e-12);
  CHECK_THROWS_AS(noam_lr(10, 1e-3, 0), ValueError);
  CHECK_THROWS_AS(noam_lr(0, 1e-3, 10), ValueError);

  PiecewiseNoam pw;
  CHECK(rel(piecewise_noam_lr(25000, pw), 2e-5) <= 1e-12);
  CHECK(rel(piecewise_noam_lr(50000, pw), 2e-4) <= 1e-12);
  CHECK(rel(piecewise_noam_lr(200000, pw), 1e-4) <= 1e-12);
  CHECK(rel(piecewise_noam_lr(37500, pw), 1.1e-4) <= 1e-12);

  // Increasing up to warm-up, decreasing after; continuous at the joints.
  for (std::uint64_t s = 2; s <= 25000; s += 97) CHECK(noam_lr(s, 2e-3, 25000) > noam_lr(s - 1, 2e-3, 25000));
  for (std::uint64_t s = 25001; s <= 200000; s += 997) CHECK(noam_lr(s, 2e-3, 25000) < noam_lr(s - 1, 2e-3, 25000));
  for (std::uint64_t joint : {25000ULL, 50000ULL}) {
    const double l = piecewise_noam_lr(joint - 1, pw), m = piecewise_noam_lr(joint, pw),
                 r = piecewise_noam_lr(joint + 1, pw);
    CHECK(std::abs(m - l) < 1e-8);
    CHECK(std::abs(r - m) < 1e-8);
  }
  CHECK(parse_schedule("piecewise-noam") == ScheduleKind::kPiecewiseNoam);
  CHECK_THROWS_AS(parse_schedule("cosine"), ValueError);
}

TEST_CASE("adamw update") {
  OptimizerConfig cfg;
  SUBCASE("first step by hand") {
    std::vector<double> th{1.0};
    AdamState st;
    const std::vector<double> g{1.0};
    adamw_update(th, g, 0.1, cfg, st);
    // m_hat = v_hat = 1: 1 * (1 - 1e-4) - 0.1 / (1 + 1e-8)
    CHECK(th[0] == doctest::Approx(0.899900001).epsilon(1e-12));
  }
  SUBCASE("matches a reference over many steps") {
    num::Rng rng(5);
    std::vector<double> a(7), b;
    for (double& x : a) x = rng.normal();
    b = a;
    AdamState st;
    RefAdam ref;
    for (int s = 0; s < 50; ++s) {
      std::vector<double> g(7);
      for (double& x : g) x = rng.normal();
      adamw_update(a, g, 3e-3, cfg, st);
      ref.step(b, g, 3e-3, cfg.beta1, cfg.beta2, cfg.weight_decay, cfg.eps);
    }
    CHECK(testing::max_abs_diff(a, b) < 1e-15);
  }
  SUBCASE("zero gradient, zero decay leaves parameters alone") {
    OptimizerConfig c = cfg;
    c.weight_decay = 0.0;
    std::vector<double> th{0.5, -2.0, 3.0};
    AdamState st;
    for (int s = 0; s < 5; ++s) adamw_update(th, std::vector<double>(3, 0.0), 0.1, c, st);
    CHECK(th == std::vector<double>{0.5, -2.0, 3.0});
  }
  SUBCASE("identical runs are identical") {
    auto run = [&] {
      num::Rng rng(9);
      std::vector<double> th(4, 1.0);
      AdamState st;
      for (int s = 0; s < 20; ++s) {
        std::vector<double> g(4);
        for (double& x : g) x = rng.normal();
        adamw_update(th, g, 1e-2, cfg, st);
      }
      return std::make_pair(th, st);
    };
    CHECK(run() == run());
  }
  SUBCASE("non-finite gradients skip the step and keep state") {
    AdamW opt(cfg);
    auto params = one_param({1.0, 2.0}, {0.5, -0.5});
    CHECK(opt.step(params, 1e-2));
    const auto state = opt.state();
    const std::vector<double> before(params[0].second.data().begin(), params[0].second.data().end());
    params[0].second.mutable_grad()[1] = std::nan("");
    CHECK_FALSE(opt.step(params, 1e-2));
    CHECK(opt.skipped() == 1);
    CHECK(opt.steps() == 1);
    CHECK(opt.state() == state);
    CHECK(std::vector<double>(params[0].second.data().begin(), params[0].second.data().end()) == before);
    params[0].second.mutable_grad()[1] = std::numeric_limits<double>::infinity();
    CHECK_FALSE(opt.step(params, 1e-2));
    CHECK(opt.state() == state);
  }
  OptimizerConfig bad = cfg;
  bad.beta2 = 1.0;
  CHECK_THROWS_AS(bad.validate(), ValueError);
}

TEST_CASE("gradient clipping") {
  auto p = one_param({0, 0}, {12.0, 16.0});  // norm 20
  CHECK(clip_grad_norm(p, 10.0) == doctest::Approx(20.0));
  CHECK(grad_norm(p) == doctest::Approx(10.0).epsilon(1e-12));
  CHECK(p[0].second.grad()[0] == doctest::Approx(6.0));

  auto q = one_param({0, 0}, {3.0, 4.0});
  CHECK(clip_grad_norm(q, 10.0) == doctest::Approx(5.0));
  CHECK(q[0].second.grad()[0] == 3.0);
  CHECK(q[0].second.grad()[1] == 4.0);

  auto z = one_param({0, 0}, {0.0, 0.0});
  CHECK(clip_grad_norm(z, 10.0) == 0.0);
  CHECK(z[0].second.grad()[0] == 0.0);
}

TEST_CASE("task sampling") {
  num::Rng rng(2024);
  int asr = 0;
  for (int i = 0; i < 10000; ++i) asr += sample_task(rng, 0.5) == Task::kAsr;
  CHECK(asr >= 4800);
  CHECK(asr <= 5200);
  for (int i = 0; i < 100; ++i) {
    CHECK(sample_task(rng, 1.0) == Task::kAsr);
    CHECK(sample_task(rng, 0.0) == Task::kSt);
  }
  num::Rng a(7), b(7);
  for (int i = 0; i < 100; ++i) CHECK(sample_task(a, 0.3) == sample_task(b, 0.3));
  CHECK_THROWS_AS(sample_task(rng, 1.5), ValueError);
}

TEST_CASE("token-budget batching") {
  const auto data = testing::synth_dataset(12, 4, 2, 6);
  num::Rng rng(1);
  const auto batches = make_batches(data, 20, rng);
  std::vector<int> seen(data.size(), 0);
  for (const auto& b : batches) {
    std::size_t tokens = 0;
    for (std::size_t i : b) {
      ++seen[i];
      tokens += target_tokens(data.utts[i].entry);
    }
    CHECK((tokens <= 20 || b.size() == 1));
    // Each batch is a contiguous run of the length-sorted order.
    for (std::size_t k = 1; k < b.size(); ++k) {
      CHECK(data.utts[b[k - 1]].features.frames <= data.utts[b[k]].features.frames);
    }
  }
  for (int s : seen) CHECK(s == 1);
  num::Rng r2(1);
  CHECK(make_batches(data, 20, r2) == batches);
  CHECK_THROWS_AS(make_batches(Dataset{}, 20, rng), ValueError);

  const auto vocab = testing::synth_vocab();
  const std::vector<std::size_t> idx{0, 3};
  const std::vector<Task> tasks{Task::kAsr, Task::kSt};
  const auto b = collate(data, idx, tasks, vocab);
  CHECK(b.features.shape() ==
        num::Shape{2, std::max(data.utts[0].features.frames, data.utts[3].features.frames), 80});
  CHECK(b.lengths == std::vector<std::size_t>{data.utts[0].features.frames, data.utts[3].features.frames});
  CHECK(b.targets.tasks == tasks);
}

TEST_CASE("stage config") {
  auto c1 = StageConfig::defaults(1);
  CHECK(c1.schedule == ScheduleKind::kNoam);
  CHECK(c1.clip_norm == 10.0);
  auto c2 = StageConfig::defaults(2);
  CHECK(c2.schedule == ScheduleKind::kConstant);
  CHECK(c2.lr_at(7) == c2.lr_const);
  CHECK_NOTHROW(c1.validate());
  CHECK_NOTHROW(c2.validate());

  CHECK(StageConfig::from_json(c2.to_json()).to_json() == c2.to_json());
  auto j = c1.to_json();
  j["momentum"] = 0.9;
  CHECK_THROWS_WITH_AS(StageConfig::from_json(j), doctest::Contains("momentum"), ValueError);

  auto bad = c1;
  bad.schedule = ScheduleKind::kConstant;
  CHECK_THROWS_AS(bad.validate(), ValueError);
  bad = c2;
  bad.schedule = ScheduleKind::kNoam;
  CHECK_THROWS_AS(bad.validate(), ValueError);
  bad = c2;
  bad.p_asr = -0.1;
  CHECK_THROWS_AS(bad.validate(), ValueError);

  auto pw = c1;
  pw.schedule = ScheduleKind::kPiecewiseNoam;
  pw.lr_peak = 2e-4;
  pw.warmup_steps = 50000;
  CHECK(rel(pw.lr_at(25000), 2e-5) <= 1e-12);
  CHECK(rel(pw.lr_at(50000), 2e-4) <= 1e-12);

  auto dir = scratch("cfg");
  std::ofstream(dir / "s.json") << R"({"stage": 2, "lr_const": 1e-5, "p_asr": 0.25})";
  auto loaded = StageConfig::load(dir / "s.json");
  CHECK(loaded.stage == 2);
  CHECK(loaded.lr_const == 1e-5);
  CHECK(loaded.p_asr == 0.25);
  CHECK_THROWS_AS(StageConfig::load(dir / "missing.json"), IoError);
}

TEST_CASE("gradient accumulation matches one large batch") {
  const auto data = testing::synth_dataset(4, 11);
  const auto vocab = testing::synth_vocab();
  const auto mc = testing::tiny_config(vocab.size());
  auto cfg = StageConfig::defaults(2);
  cfg.lr_const = 1e-3;
  cfg.spec_augment = false;
  const std::vector<Task> tasks{Task::kAsr, Task::kSt, Task::kSt, Task::kAsr};

  auto run = [&](const std::vector<std::vector<std::size_t>>& split) {
    model::FamaModel m(mc);
    Trainer tr(m, cfg);
    std::vector<Batch> micro;
    for (const auto& idx : split) {
      std::vector<Task> t;
      for (std::size_t i : idx) t.push_back(tasks[i]);
      micro.push_back(collate(data, idx, t, vocab));
    }
    const auto r = tr.step(micro);
    tr.step(micro);
    std::vector<double> flat;
    for (const auto& [_, p] : m.params().entries()) flat.insert(flat.end(), p.data().begin(), p.data().end());
    return std::make_pair(flat, r);
  };
  const auto [whole, rw] = run({{0, 1, 2, 3}});
  for (const auto& split : std::vector<std::vector<std::vector<std::size_t>>>{
           {{0, 1}, {2, 3}}, {{0}, {1, 2, 3}}, {{0, 1, 2}, {3}}, {{0}, {1}, {2}, {3}}}) {
    const auto [acc, ra] = run(split);
    CHECK(testing::max_abs_diff(whole, acc) <= 1e-6);
    CHECK(ra.loss.total == doctest::Approx(rw.loss.total).epsilon(1e-9));
    CHECK(ra.grad_norm == doctest::Approx(rw.grad_norm).epsilon(1e-7));
  }
}

TEST_CASE("train_stage outputs") {
  const auto data = testing::synth_dataset(6, 21);
  const auto vocab = testing::synth_vocab();
  const auto mc = testing::tiny_config(vocab.size());
  auto cfg = StageConfig::defaults(1);
  cfg.warmup_steps = 4;
  cfg.lr_peak = 1e-3;
  cfg.batch_tokens = 30;
  cfg.max_steps = 6;
  cfg.checkpoint_interval = 2;
  fama::set_warning_sink([](const std::string&) {});

  SUBCASE("checkpoints land on the interval and the log has one record per step") {
    auto dir = scratch("stage");
    model::FamaModel m(mc);
    const auto s = train_stage(data, m, vocab, cfg, dir);
    CHECK(s.steps == 6);
    std::vector<std::string> names;
    for (const auto& e : fs::directory_iterator(dir)) {
      if (e.path().extension() == ".ckpt") names.push_back(e.path().filename().string());
    }
    std::sort(names.begin(), names.end());
    CHECK(names == std::vector<std::string>{"checkpoint_2.ckpt", "checkpoint_4.ckpt", "checkpoint_6.ckpt"});
    CHECK(s.final_checkpoint == dir / "checkpoint_6.ckpt");
    std::ifstream log(s.metrics_log);
    std::string line;
    std::uint64_t n = 0;
    while (std::getline(log, line)) {
      const auto j = nlohmann::json::parse(line);
      ++n;
      CHECK(j.at("step") == n);
      for (const char* k : {"lr", "ce", "ctc_src", "ctc_tgt", "total", "grad_norm", "wall_ms"}) CHECK(j.contains(k));
    }
    CHECK(n == 6);
    const auto ck = model::load_checkpoint(s.final_checkpoint);
    CHECK(ck.step == 6);
    CHECK(ck.stage == "asr");
  }
  SUBCASE("the loop is deterministic") {
    auto a = scratch("det_a"), b = scratch("det_b");
    model::FamaModel m1(mc), m2(mc);
    auto c = cfg;
    c.spec_augment = true;
    const auto s1 = train_stage(data, m1, vocab, c, a);
    const auto s2 = train_stage(data, m2, vocab, c, b);
    CHECK(slurp(s1.final_checkpoint) == slurp(s2.final_checkpoint));
  }
  SUBCASE("zero steps writes the initial model and an empty log") {
    auto dir = scratch("zero");
    model::FamaModel m(mc);
    auto c = cfg;
    c.max_steps = 0;
    const auto s = train_stage(data, m, vocab, c, dir);
    CHECK(s.final_checkpoint == dir / "checkpoint_0.ckpt");
    CHECK(fs::file_size(s.metrics_log) == 0);
    const auto ck = model::load_checkpoint(s.final_checkpoint);
    CHECK(ck.tensors == model::make_checkpoint(m, vocab, 0, "asr").tensors);
  }
  SUBCASE("training lowers the loss") {
    auto dir = scratch("loss");
    model::FamaModel m(mc);
    auto c = cfg;
    c.max_steps = 40;
    c.checkpoint_interval = 100;
    c.warmup_steps = 10;
    c.lr_peak = 3e-3;
    c.batch_tokens = 1000;
    c.spec_augment = false;
    std::vector<double> totals;
    train_stage(data, m, vocab, c, dir, [&](const StepResult& r) {
      totals.push_back(r.loss.total);
      return true;
    });
    CHECK(totals.back() < 0.7 * totals.front());
  }
  SUBCASE("bad inputs") {
    auto dir = scratch("bad");
    model::FamaModel m(mc);
    CHECK_THROWS_WITH_AS(train_stage(Dataset{}, m, vocab, cfg, dir), doctest::Contains("no utterances"), ValueError);
    auto other = mc;
    other.vocab_size = vocab.size() + 1;
    model::FamaModel wrong(other);
    CHECK_THROWS_AS(train_stage(data, wrong, vocab, cfg, dir), ValueError);
    // Stage 2 needs translations for sampled ST rows.
    auto d2 = data;
    d2.utts[0].entry.translation.reset();
    d2.utts[1].entry.translation.reset();
    auto c2 = StageConfig::defaults(2);
    c2.p_asr = 0.0;
    c2.max_steps = 3;
    c2.batch_tokens = 1000;
    CHECK_THROWS_WITH_AS(train_stage(d2, m, vocab, c2, dir), doctest::Contains("translation"), ValueError);
  }
  fama::set_warning_sink({});
}

TEST_CASE("checkpoint averaging") {
  const auto vocab = testing::synth_vocab();
  const auto mc = testing::tiny_config(vocab.size());
  model::FamaModel m(mc);
  const auto base = model::make_checkpoint(m, vocab, 10, "asr");

  SUBCASE("identical checkpoints average to themselves") {
    std::vector<model::Checkpoint> same(5, base);
    const auto avg = average_checkpoints(same);
    CHECK(avg.tensors == base.tensors);
    CHECK(avg.step == 10);
  }
  SUBCASE("0 and 2 give 1") {
    auto a = base, b = base;
    for (auto& t : a.tensors) std::fill(t.values.begin(), t.values.end(), 0.0f);
    for (auto& t : b.tensors) std::fill(t.values.begin(), t.values.end(), 2.0f);
    b.step = 30;
    const std::vector<model::Checkpoint> pair{a, b};
    const auto avg = average_checkpoints(pair);
    for (const auto& t : avg.tensors) {
      for (float v : t.values) CHECK(v == 1.0f);
    }
    CHECK(avg.step == 30);
  }
  SUBCASE("matches an independent wide mean") {
    num::Rng rng(17);
    std::vector<model::Checkpoint> ks;
    for (int k = 0; k < 25; ++k) {
      auto c = base;
      c.step = 1000 * (k + 1);
      for (auto& t : c.tensors) {
        for (float& v : t.values) v += static_cast<float>(rng.normal() * 0.01);
      }
      ks.push_back(std::move(c));
    }
    const auto avg = average_checkpoints(ks);
    CHECK(avg.step == 25000);
    std::size_t mismatches = 0;
    for (std::size_t i = 0; i < base.tensors.size(); ++i) {
      for (std::size_t e = 0; e < base.tensors[i].values.size(); ++e) {
        long double s = 0;
        for (const auto& c : ks) s += c.tensors[i].values[e];
        mismatches += static_cast<float>(s / 25.0L) != avg.tensors[i].values[e];
      }
    }
    CHECK(mismatches == 0);
  }
  SUBCASE("mismatches name the offender") {
    auto renamed = base;
    renamed.tensors[3].name = "bogus.weight";
    std::vector<model::Checkpoint> v{base, renamed};
    CHECK_THROWS_WITH_AS(average_checkpoints(v), doctest::Contains("bogus.weight"), ValueError);
    auto reshaped = base;
    reshaped.tensors[2].shape.push_back(1);
    v = {base, reshaped};
    CHECK_THROWS_WITH_AS(average_checkpoints(v), doctest::Contains(base.tensors[2].name.c_str()), ValueError);
    auto other = base;
    other.config.d_ffn = 64;
    v = {base, other};
    CHECK_THROWS_AS(average_checkpoints(v), ValueError);
    CHECK_THROWS_AS(average_checkpoints(std::vector<model::Checkpoint>{}), ValueError);
  }
  SUBCASE("last checkpoints from disk") {
    auto dir = scratch("avg");
    for (int s : {2, 10, 4, 8, 6}) {
      auto c = base;
      c.step = static_cast<std::uint64_t>(s);
      model::save_checkpoint(c, dir / ("checkpoint_" + std::to_string(s) + ".ckpt"));
    }
    std::ofstream(dir / "notes.txt") << "x";
    const auto last = last_checkpoints(dir, 3);
    REQUIRE(last.size() == 3);
    CHECK(last[0].filename() == "checkpoint_6.ckpt");
    CHECK(last[2].filename() == "checkpoint_10.ckpt");
    CHECK(average_checkpoints(last).step == 10);
    CHECK(last_checkpoints(dir, 25).size() == 5);
  }
}

TEST_CASE("forgetting probe plumbing") {
  const auto train_set = testing::synth_dataset(6, 31);
  const auto valid = testing::synth_dataset(3, 32);
  const auto vocab = testing::synth_vocab();
  model::FamaModel m(testing::tiny_config(vocab.size()));
  const auto ck = model::make_checkpoint(m, vocab, 0, "asr");
  ProbeConfig pc;
  pc.variants = {{1e-3, 0.5}, {1e-2, 1.0}};
  pc.steps = 4;
  pc.eval_interval = 2;
  pc.stage.batch_tokens = 1000;
  pc.stage.spec_augment = false;
  const auto a = forgetting_probe(ck, train_set, valid, pc);
  const auto b = forgetting_probe(ck, train_set, valid, pc);
  REQUIRE(a.runs.size() == 2);
  CHECK(a.runs[0].points.size() == 3);
  CHECK(a.runs[0].points[0].step == 0);
  CHECK(a.runs[0].points[2].step == 4);
  CHECK(a.runs[0].points[0].ppl_asr == a.runs[1].points[0].ppl_asr);
  CHECK(a.to_json() == b.to_json());
  CHECK(a.series().find("lr\tp_asr\tstep\tppl_asr\tppl_st") == 0);
  CHECK(a.table().find("asr_ppl_end") != std::string::npos);
  CHECK_THROWS_WITH_AS(forgetting_probe(ck, train_set, Dataset{}, pc), doctest::Contains("validation"), ValueError);
}
