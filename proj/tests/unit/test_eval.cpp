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

#include <algorithm>
#include <chrono>
#include <cmath>
#include <thread>

#include "doctest.h"
#include "fama/eval/perplexity.hpp"
#include "fama/eval/report.hpp"
#include "fama/eval/wer.hpp"
#include "fama/eval/xrtf.hpp"
#include "fama/frontend/synth.hpp"
#include "fama/textproc/unicode.hpp"
#include "test_util.hpp"

using namespace fama;
using namespace fama::eval;

namespace {

// Plain edit distance, no backtrace.
std::size_t levenshtein(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0u : 1u)});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

std::vector<std::string> random_words(num::Rng& rng, std::size_t max_len) {
  static const char* pool[] = {"a", "b", "c", "d"};
  std::vector<std::string> w(rng.below(max_len + 1));
  for (auto& x : w) x = pool[rng.below(4)];
  return w;
}

std::string join(const std::vector<std::string>& w) {
  std::string s;
  for (const auto& x : w) s += (s.empty() ? "" : " ") + x;
  return s;
}

num::Tensor& param(model::FamaModel& m, const std::string& name) {
  for (auto& [n, t] : m.params().entries()) {
    if (n == name) return t;
  }
  throw std::runtime_error("no parameter " + name);
}

}  // namespace

TEST_CASE("word error rate") {
  const std::vector<std::string> r{"a b c"}, h{"a x c"};
  const auto w = wer(r, h);
  CHECK(w.counts.substitutions == 1);
  CHECK(w.counts.deletions == 0);
  CHECK(w.counts.insertions == 0);
  CHECK(w.counts.ref_words == 3);
  CHECK(w.wer == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(wer(r, r).wer == 0.0);
  CHECK(wer(std::vector<std::string>{"Hello, World!"}, std::vector<std::string>{"hello world"}).wer == 0.0);
  CHECK(wer(std::vector<std::string>{"Hello, World!"}, std::vector<std::string>{"hello world"}, false).wer > 0.0);
  CHECK_THROWS_AS(wer(r, std::vector<std::string>{}), ValueError);
  CHECK_THROWS_AS(wer(std::vector<std::string>{""}, std::vector<std::string>{"a"}), ValueError);

  SUBCASE("tie breaking") {
    // "a b" vs "b a": two substitutions beat a deletion plus an insertion.
    const std::vector<std::string> ab{"a", "b"}, ba{"b", "a"};
    const auto c = align_words(ab, ba);
    CHECK(c.substitutions == 2);
    CHECK(c.errors() == 2);
    const std::vector<std::string> one{"a"}, two{"b", "c"};
    const auto d = align_words(one, two);
    CHECK(d.substitutions == 1);
    CHECK(d.insertions == 1);
    const auto e = align_words(two, one);
    CHECK(e.substitutions == 1);
    CHECK(e.deletions == 1);
  }

  SUBCASE("random pairs") {
    num::Rng rng(4);
    std::vector<std::string> refs, hyps;
    for (int k = 0; k < 400; ++k) {
      auto a = random_words(rng, 7);
      if (a.empty()) a.push_back("a");
      const auto b = random_words(rng, 7);
      const auto c = align_words(a, b);
      CHECK(c.errors() == levenshtein(a, b));
      CHECK(c.ref_words == a.size());
      // counts are consistent with the lengths
      CHECK(a.size() - c.deletions + c.insertions == b.size());
      CHECK(align_words(a, a).errors() == 0);
      CHECK(static_cast<double>(c.errors()) / a.size() <= static_cast<double>(a.size() + b.size()) / a.size());
      refs.push_back(join(a));
      hyps.push_back(join(b));
    }
    const auto pooled = wer(refs, hyps);
    std::size_t errs = 0, words = 0;
    for (std::size_t i = 0; i < refs.size(); ++i) {
      errs += levenshtein(split_words(refs[i]), split_words(hyps[i]));
      words += split_words(refs[i]).size();
    }
    CHECK(pooled.wer == static_cast<double>(errs) / words);
    CHECK(pooled.utterances == refs.size());
    std::vector<std::size_t> order(refs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order.begin(), order.end());
    std::vector<std::string> r2, h2;
    for (std::size_t i : order) {
      r2.push_back(refs[i]);
      h2.push_back(hyps[i]);
    }
    CHECK(wer(r2, h2).wer == pooled.wer);
  }
}

TEST_CASE("perplexity") {
  auto vocab = testing::synth_vocab();
  // Pad the vocabulary to 100 entries with unused characters.
  auto tokens = vocab.tokens();
  for (char c = '!'; tokens.size() < 100; ++c) {
    if (std::find(tokens.begin(), tokens.end(), std::string(1, c)) == tokens.end()) tokens.push_back(std::string(1, c));
  }
  vocab = text::Vocabulary::from_tokens(tokens);
  REQUIRE(vocab.size() == 100);
  model::FamaModel m(testing::tiny_config(vocab.size()));
  const auto data = testing::synth_dataset(6, 2);

  SUBCASE("uniform model") {
    auto& w = param(m, "decoder.out.weight");
    std::fill(w.data().begin(), w.data().end(), 0.0);
    for (Task t : {Task::kAsr, Task::kSt}) {
      const auto p = perplexity(m, data, t, vocab, 4);
      CHECK(std::abs(p.ppl - 100.0) <= 1e-6);
      CHECK(p.tokens > 0);
    }
  }
  SUBCASE("deterministic, batch independent, token counts") {
    const auto a = perplexity(m, data, Task::kAsr, vocab, 8);
    const auto b = perplexity(m, data, Task::kAsr, vocab, 8);
    CHECK(a.ppl == b.ppl);
    CHECK(a.ppl >= 1.0);
    const auto c = perplexity(m, data, Task::kAsr, vocab, 1);
    CHECK(c.ppl == doctest::Approx(a.ppl).epsilon(1e-9));
    std::size_t want = 0;
    for (const auto& u : data.utts) want += text::utf8_length(u.entry.transcript) + 1;
    CHECK(a.tokens == want);
    CHECK(a.ppl == doctest::Approx(std::exp(a.nll / a.tokens)).epsilon(1e-12));
  }
  SUBCASE("training mode is restored") {
    m.set_training(true);
    perplexity(m, data, Task::kSt, vocab);
    CHECK(m.training());
  }
  SUBCASE("st needs translations") {
    auto missing = data;
    missing.utts[1].entry.translation.reset();
    missing.utts[1].entry.tgt_lang.reset();
    CHECK_THROWS_AS(perplexity(m, missing, Task::kSt, vocab), ValueError);
    CHECK_NOTHROW(perplexity(m, missing, Task::kAsr, vocab));
    CHECK_THROWS_AS(perplexity(m, train::Dataset{}, Task::kAsr, vocab), ValueError);
  }
}

TEST_CASE("xrtf arithmetic and timing harness") {
  CHECK(xrtf(60.0, 5.0) == 12.0);
  CHECK_THROWS_AS(xrtf(1.0, 0.0), ValueError);
  std::vector<std::size_t> calls;
  const auto t = time_batches(3, [&](std::size_t i) { calls.push_back(i); });
  CHECK(calls == std::vector<std::size_t>{0, 0, 1, 2});
  CHECK(t.batches == 3);
  CHECK_THROWS_AS(time_batches(0, [](std::size_t) {}), ValueError);

  // Injected sleep: doubling the per-batch time halves xRTF.
  auto sleepy = [](std::chrono::milliseconds ms) {
    double best = 1e300;
    for (int rep = 0; rep < 3; ++rep) {
      best = std::min(best, time_batches(4, [ms](std::size_t) { std::this_thread::sleep_for(ms); }).compute_seconds);
    }
    return best;
  };
  const double audio = 10.0;
  const double x1 = xrtf(audio, sleepy(std::chrono::milliseconds(25)));
  const double x2 = xrtf(audio, sleepy(std::chrono::milliseconds(50)));
  CHECK(x1 / x2 == doctest::Approx(2.0).epsilon(0.1));
}

TEST_CASE("xrtf bench") {
  const auto vocab = testing::synth_vocab();
  model::FamaModel m(testing::tiny_config(vocab.size()));
  audio::CorpusSpec spec;
  spec.num_utts = 6;
  spec.seed = 12;
  spec.min_tokens = 1;
  spec.max_tokens = 3;
  std::vector<BenchInput> inputs;
  double seconds = 0.0;
  for (auto& u : audio::synth_corpus(spec)) {
    seconds += static_cast<double>(u.samples.size()) / 16000.0;
    inputs.push_back({u.id, u.samples, Lang::kEn});
  }
  decode::DecodeConfig cfg;
  const auto one = xrtf_bench(m, inputs, vocab, 1, cfg);
  const auto again = xrtf_bench(m, inputs, vocab, 1, cfg);
  const auto four = xrtf_bench(m, inputs, vocab, 4, cfg);
  CHECK(one.texts == again.texts);
  CHECK(one.texts == four.texts);
  CHECK(one.audio_seconds == doctest::Approx(seconds));
  CHECK(one.xrtf == doctest::Approx(one.audio_seconds / one.compute_seconds));
  CHECK(four.batch_size == 4);
  CHECK(four.workers == 1);
  int hooks = 0;
  xrtf_bench(m, inputs, vocab, 4, cfg, [&] { ++hooks; });
  CHECK(hooks == 3);  // warm-up plus two batches
  CHECK_THROWS_AS(xrtf_bench(m, {}, vocab, 1, cfg), ValueError);
  CHECK_THROWS_AS(xrtf_bench(m, inputs, vocab, 0, cfg), ValueError);

  EvalReport rep;
  rep.bench = four;
  rep.ppl_asr = 3.5;
  rep.wer = wer(std::vector<std::string>{"a b c"}, std::vector<std::string>{"a x c"});
  const auto j = rep.to_json();
  for (const char* k : {"wer", "substitutions", "deletions", "insertions", "ref_words", "ppl_asr", "xrtf",
                        "audio_seconds", "compute_seconds", "batch_size"}) {
    CHECK(j.contains(k));
  }
  CHECK_FALSE(j.contains("ppl_st"));
  CHECK(j.at("wer").get<double>() * 3 == doctest::Approx(1.0));
  const auto table = rep.table();
  CHECK(table.find("ppl_asr") != std::string::npos);
  CHECK(table.find("ppl_st") == std::string::npos);
  // values start in one column
  std::size_t col = std::string::npos;
  std::size_t pos = 0;
  while (pos < table.size()) {
    const auto end = table.find('\n', pos);
    const auto line = table.substr(pos, end - pos);
    const auto v = line.find_first_not_of(' ', line.find(' '));
    if (col == std::string::npos) col = v;
    CHECK(v == col);
    pos = end + 1;
  }
}
