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
#include <limits>
#include <map>

#include "doctest.h"
#include "fama/losses/combined.hpp"
#include "fama/losses/cross_entropy.hpp"
#include "fama/losses/ctc.hpp"
#include "fama/numcore/autograd.hpp"
#include "fama/numcore/gradcheck.hpp"
#include "fama/numcore/ops.hpp"
#include "test_util.hpp"

using namespace fama;
using namespace fama::loss;
using num::Tensor;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Sums the probability of every frame labelling that collapses to `target`.
double brute_force_nll(const std::vector<double>& lp, std::size_t T, std::size_t V, const std::vector<TokenId>& target) {
  std::vector<std::size_t> path(T, 0);
  double log_total = -kInf;
  while (true) {
    std::vector<TokenId> collapsed;
    TokenId prev = -1;
    double lpath = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
      const auto k = static_cast<TokenId>(path[t]);
      lpath += lp[t * V + path[t]];
      if (k != 0 && k != prev) collapsed.push_back(k);
      prev = k;
    }
    if (collapsed == target) {
      const double m = std::max(log_total, lpath);
      log_total = m + std::log(std::exp(log_total - m) + std::exp(lpath - m));
    }
    std::size_t i = 0;
    while (i < T && ++path[i] == V) path[i++] = 0;
    if (i == T) break;
  }
  return -log_total;
}

std::vector<double> random_logprobs(std::size_t T, std::size_t V, num::Rng& rng) {
  std::vector<double> lp(T * V);
  for (std::size_t t = 0; t < T; ++t) {
    double z = 0.0;
    for (std::size_t v = 0; v < V; ++v) z += std::exp(lp[t * V + v] = 2.0 * rng.normal());
    for (std::size_t v = 0; v < V; ++v) lp[t * V + v] -= std::log(z);
  }
  return lp;
}

}  // namespace

TEST_CASE("ctc hand cases") {
  const double l2 = std::log(0.5);
  CHECK(ctc_nll(std::vector<double>{l2, l2}, 1, 2, std::vector<TokenId>{1}).nll == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(ctc_nll(std::vector<double>{l2, l2, l2, l2}, 2, 2, std::vector<TokenId>{1}).nll ==
        doctest::Approx(0.2876820724517809).epsilon(1e-12));
  const auto r = ctc_nll(std::vector<double>{l2, l2}, 1, 2, std::vector<TokenId>{1, 1});
  CHECK_FALSE(r.feasible);
  CHECK(r.nll == kInf);
  CHECK(ctc_min_frames(std::vector<TokenId>{1, 1, 2, 2, 2}) == 8);
  CHECK_THROWS_AS(ctc_nll(std::vector<double>{l2, l2}, 1, 2, std::vector<TokenId>{0}), ValueError);
  CHECK_THROWS_AS(ctc_nll(std::vector<double>{l2, l2}, 1, 2, std::vector<TokenId>{5}), ValueError);
}

TEST_CASE("ctc matches path enumeration") {
  num::Rng rng(2024);
  int feasible = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const auto T = static_cast<std::size_t>(rng.range(1, 6));
    const auto V = static_cast<std::size_t>(rng.range(2, 4));
    const auto L = static_cast<std::size_t>(rng.range(0, 3));
    std::vector<TokenId> target;
    for (std::size_t i = 0; i < L; ++i) target.push_back(static_cast<TokenId>(rng.range(1, static_cast<std::int64_t>(V) - 1)));
    const auto lp = random_logprobs(T, V, rng);
    const double oracle = brute_force_nll(lp, T, V, target);
    const auto got = ctc_nll(lp, T, V, target);
    if (oracle == kInf) {
      CHECK_FALSE(got.feasible);
      CHECK(got.nll == kInf);
    } else {
      ++feasible;
      CHECK(got.feasible);
      CHECK(std::abs(got.nll - oracle) <= 1e-9);
      std::vector<double> g(lp.size());
      CHECK(ctc_nll_grad(lp, T, V, target, g).nll == doctest::Approx(got.nll).epsilon(1e-12));
    }
  }
  CHECK(feasible > 200);
}

TEST_CASE("ctc gradient matches finite differences") {
  num::Rng rng(5);
  const std::vector<TokenId> target{1, 2};
  SUBCASE("raw log-probs 4x3") {
    Tensor x = Tensor::from({4, 3}, random_logprobs(4, 3, rng));
    auto f = [&](const Tensor& t) { return ctc_loss(t, target, 4).loss; };
    CHECK(num::finite_difference_check(f, x, 1e-6) <= 1e-5);
  }
  SUBCASE("through log-softmax") {
    Tensor logits = testing::random_tensor({6, 4}, rng);
    const std::vector<TokenId> tg{1, 1, 3};
    auto f = [&](const Tensor& t) { return ctc_loss(num::log_softmax(t), tg, 6).loss; };
    CHECK(num::finite_difference_check(f, logits, 1e-6) <= 1e-5);
  }
  SUBCASE("batched with padding") {
    Tensor logits = testing::random_tensor({3, 5, 4}, rng);
    const std::vector<std::size_t> lens{5, 3, 4};
    const std::vector<std::vector<TokenId>> tg{{1, 2}, {3}, {2, 2}};
    auto f = [&](const Tensor& t) { return ctc_loss_batch(num::log_softmax(t), lens, tg).sum; };
    CHECK(num::finite_difference_check(f, logits, 1e-6) <= 1e-5);
  }
}

TEST_CASE("ctc batch equals per-row losses") {
  num::Rng rng(8);
  Tensor lp = num::log_softmax(testing::random_tensor({3, 6, 4}, rng));
  const std::vector<std::size_t> lens{6, 2, 4};
  const std::vector<std::vector<TokenId>> tg{{1, 2, 3}, {1, 1}, {}};
  const auto b = ctc_loss_batch(lp, lens, tg);
  CHECK(b.feasible == 2);
  CHECK(b.infeasible == 1);
  double expect = 0.0;
  for (std::size_t r : {0u, 2u}) {
    const auto row = lp.data().subspan(r * 24, lens[r] * 4);
    expect += ctc_nll(row, lens[r], 4, tg[r]).nll / std::max<double>(tg[r].size(), 1);
  }
  CHECK(b.sum.item() == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("ctc feasibility is monotone in frames") {
  num::Rng rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<TokenId> target;
    const auto L = rng.range(1, 4);
    for (int i = 0; i < L; ++i) target.push_back(static_cast<TokenId>(rng.range(1, 2)));
    bool was_feasible = false;
    for (std::size_t T = 1; T <= 9; ++T) {
      const auto r = ctc_nll(random_logprobs(T, 3, rng), T, 3, target);
      if (was_feasible) CHECK(r.feasible);
      was_feasible = r.feasible;
      CHECK(r.feasible == (T >= ctc_min_frames(target)));
    }
  }
}

TEST_CASE("label smoothed cross entropy") {
  SUBCASE("uniform log-probs give log V") {
    const std::size_t V = 7;
    Tensor lp = Tensor::full({3, V}, -std::log(7.0));
    for (double eps : {0.0, 0.1, 0.5}) {
      CHECK(label_smoothed_ce(lp, std::vector<TokenId>{2, 5, 4}, eps).item() == doctest::Approx(std::log(7.0)).epsilon(1e-12));
    }
  }
  SUBCASE("two-class example") {
    Tensor lp = Tensor::from({1, 2}, {std::log(0.9), std::log(0.1)});
    CHECK(label_smoothed_ce(lp, std::vector<TokenId>{0}, 0.1, -1).item() == doctest::Approx(0.21522174452463727).epsilon(1e-12));
    CHECK(label_smoothed_ce(lp, std::vector<TokenId>{0}, 0.0, -1).item() == doctest::Approx(-std::log(0.9)).epsilon(1e-12));
  }
  SUBCASE("pads are excluded and all-pad is rejected") {
    num::Rng rng(1);
    Tensor lp = num::log_softmax(testing::random_tensor({4, 9}, rng));
    const std::vector<TokenId> with_pad{3, 1, 5, 1};
    const double both = label_smoothed_ce(lp, with_pad, 0.0).item();
    CHECK(both == doctest::Approx((-lp.at(3) - lp.at(18 + 5)) / 2).epsilon(1e-12));
    CHECK_THROWS_WITH_AS(label_smoothed_ce(lp, std::vector<TokenId>{1, 1, 1, 1}, 0.1), doctest::Contains("padding"),
                         ValueError);
    CHECK_THROWS_AS(label_smoothed_ce(lp, std::vector<TokenId>{3, 1}, 0.1), ShapeError);
  }
  SUBCASE("linear in epsilon") {
    num::Rng rng(2);
    Tensor lp = num::log_softmax(testing::random_tensor({5, 6}, rng));
    const std::vector<TokenId> t{0, 2, 1, 5, 3};
    const double l0 = label_smoothed_ce(lp, t, 0.0).item();
    const double l6 = label_smoothed_ce(lp, t, 0.6).item();
    for (double eps : {0.1, 0.25, 0.4, 0.9}) {
      CHECK(label_smoothed_ce(lp, t, eps).item() == doctest::Approx(l0 + (l6 - l0) * eps / 0.6).epsilon(1e-12));
    }
  }
  SUBCASE("gradient") {
    num::Rng rng(3);
    Tensor logits = testing::random_tensor({2, 3, 5}, rng);
    const std::vector<TokenId> t{0, 2, 1, 4, 1, 3};
    auto f = [&](const Tensor& x) { return label_smoothed_ce(num::log_softmax(x), t, 0.1); };
    CHECK(num::finite_difference_check(f, logits, 1e-6) <= 1e-5);
  }
}

TEST_CASE("weighted objective") {
  LossWeights w;
  CHECK(combine(w, 1.0, 2.0, 3.0) == 13.0);
  LossWeights zero{0.0, 0.0, 0.0, 0.1};
  CHECK(combine(zero, 1.7, 2.3, 9.1) == 0.0);
  num::Rng rng(77);
  for (int i = 0; i < 100; ++i) {
    const double a = rng.uniform(0, 10), b = rng.uniform(0, 10), c = rng.uniform(0, 10);
    const double expect = 5.0 * a + 1.0 * b + 2.0 * c;
    CHECK(combine(w, a, b, c) == expect);
  }
  CHECK_THROWS_AS((LossWeights{-1.0, 1.0, 2.0, 0.1}.validate()), ValueError);
  CHECK_THROWS_AS((LossWeights{5.0, 1.0, 2.0, 1.0}.validate()), ValueError);
}

TEST_CASE("loss targets") {
  auto vocab = text::Vocabulary::build(std::vector<std::string>{"ab ba", "xy"});
  text::ManifestEntry e1{"a.wav", 1.0, Lang::kEn, "ab ba", std::string("xy"), Lang::kIt, {}};
  text::ManifestEntry e2{"b.wav", 1.0, Lang::kEn, "ba", std::nullopt, std::nullopt, {}};
  const text::ManifestEntry* batch[] = {&e1, &e2};
  SUBCASE("asr and st rows") {
    const Task tasks[] = {Task::kSt, Task::kAsr};
    const auto t = make_loss_targets(batch, tasks, vocab);
    CHECK(t.dec_len == 4);
    CHECK(t.ctc_src[0] == vocab.encode_chars("ab ba"));
    CHECK(t.ctc_tgt[0] == vocab.encode_chars("xy"));
    CHECK(t.ctc_tgt[1] == t.ctc_src[1]);
    const auto enc = vocab.encode("xy", Lang::kIt);  // bos lang x y eos
    CHECK(std::vector<TokenId>(t.decoder_inputs.begin(), t.decoder_inputs.begin() + 4) ==
          std::vector<TokenId>(enc.begin(), enc.end() - 1));
    CHECK(std::vector<TokenId>(t.decoder_targets.begin(), t.decoder_targets.begin() + 4) ==
          std::vector<TokenId>{text::Vocabulary::kPad, enc[2], enc[3], text::Vocabulary::kEos});
    CHECK(t.decoder_inputs[5] == text::Vocabulary::kLangEn);
  }
  SUBCASE("st without translation") {
    const Task tasks[] = {Task::kSt, Task::kSt};
    CHECK_THROWS_WITH_AS(make_loss_targets(batch, tasks, vocab), doctest::Contains("no translation"), ValueError);
  }
}

TEST_CASE("combined loss wiring and gradient") {
  auto vocab = text::Vocabulary::build(std::vector<std::string>{"ab", "ba"});
  const std::size_t V = vocab.size();
  text::ManifestEntry e1{"a.wav", 1.0, Lang::kEn, "ab", std::string("ba"), Lang::kIt, {}};
  text::ManifestEntry e2{"b.wav", 1.0, Lang::kEn, "b", std::string("a"), Lang::kIt, {}};
  const text::ManifestEntry* batch[] = {&e1, &e2};
  const Task asr[] = {Task::kAsr, Task::kAsr};
  const auto targets = make_loss_targets(batch, asr, vocab);
  num::Rng rng(4);
  Tensor dec = testing::random_tensor({2, targets.dec_len, V}, rng);
  Tensor src = testing::random_tensor({2, 4, V}, rng);
  Tensor tgt = testing::random_tensor({2, 4, V}, rng);
  const std::vector<std::size_t> lens{4, 3};
  auto run = [&](const Tensor& d, const Tensor& s, const Tensor& t, const LossWeights& w) {
    return combined_loss({num::log_softmax(d), num::log_softmax(s), num::log_softmax(t), lens}, targets, w);
  };
  LossWeights w;
  const auto r = run(dec, src, tgt, w);
  CHECK(r.total.item() == r.breakdown.total);
  CHECK(r.breakdown.total == 5.0 * r.breakdown.ce + 1.0 * r.breakdown.ctc_src + 2.0 * r.breakdown.ctc_tgt);
  CHECK(r.breakdown.token_count == 5);
  // ASR: both CTC terms see the transcript, so identical heads give identical losses.
  const auto same = run(dec, src, src, w);
  CHECK(same.breakdown.ctc_src == same.breakdown.ctc_tgt);
  CHECK(run(dec, src, tgt, LossWeights{0, 0, 0, 0.1}).breakdown.total == 0.0);
  auto f = [&](const Tensor& x) { return run(dec, x, tgt, w).total; };
  CHECK(num::finite_difference_check(f, src, 1e-6) <= 1e-5);
  auto g = [&](const Tensor& x) { return run(x, src, tgt, w).total; };
  CHECK(num::finite_difference_check(g, dec, 1e-6) <= 1e-5);
}
