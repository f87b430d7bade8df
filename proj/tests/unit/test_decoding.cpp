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
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>

#include "doctest.h"
#include "fama/decoding/beam_search.hpp"
#include "fama/decoding/ctc_prefix.hpp"
#include "fama/losses/ctc.hpp"
#include "fama/numcore/autograd.hpp"
#include "fama/numcore/ops.hpp"
#include "test_util.hpp"

using namespace fama;
using namespace fama::decode;
using text::Vocabulary;

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::vector<double> random_logprobs(std::size_t T, std::size_t V, num::Rng& rng, double scale = 2.0) {
  auto t = num::log_softmax(testing::random_tensor({T, V}, rng, scale));
  return {t.data().begin(), t.data().end()};
}

// Collapse and blank removal of one frame path.
std::vector<TokenId> collapse(const std::vector<TokenId>& path) {
  std::vector<TokenId> out;
  TokenId prev = -1;
  for (TokenId p : path) {
    if (p != prev && p != 0) out.push_back(p);
    prev = p;
  }
  return out;
}

// Sum over all V^T frame paths whose collapse starts with `prefix`
// (complete: equals `prefix`).
double brute_prefix(const std::vector<TokenId>& prefix, const std::vector<double>& lp, std::size_t T, std::size_t V,
                    bool complete) {
  double total = 0.0;
  std::vector<TokenId> path(T, 0);
  std::function<void(std::size_t, double)> rec = [&](std::size_t t, double logp) {
    if (t == T) {
      const auto y = collapse(path);
      const bool ok = complete ? y == prefix
                               : y.size() >= prefix.size() && std::equal(prefix.begin(), prefix.end(), y.begin());
      if (ok) total += std::exp(logp);
      return;
    }
    for (std::size_t v = 0; v < V; ++v) {
      path[t] = static_cast<TokenId>(v);
      rec(t + 1, logp + lp[t * V + v]);
    }
  };
  rec(0, 0.0);
  return total > 0 ? std::log(total) : kNegInf;
}

train::Dataset varied_dataset(std::size_t n, std::uint64_t seed) {
  auto d = testing::synth_dataset(n, seed, 1, 4);
  return d;
}

num::Tensor& param(model::FamaModel& m, const std::string& name) {
  for (auto& [n, t] : m.params().entries()) {
    if (n == name) return t;
  }
  throw std::runtime_error("no parameter " + name);
}

bool has_repeated_ngram(const std::vector<TokenId>& t, std::size_t n) {
  for (std::size_t i = 0; i + n <= t.size(); ++i) {
    for (std::size_t j = i + 1; j + n <= t.size(); ++j) {
      if (std::equal(t.begin() + i, t.begin() + i + n, t.begin() + j)) return true;
    }
  }
  return false;
}

struct Fixture {
  Vocabulary vocab = testing::synth_vocab();
  model::FamaModel model{testing::tiny_config(vocab.size())};
  train::Dataset data = varied_dataset(8, 5);
};

}  // namespace

TEST_CASE("greedy ctc") {
  const std::size_t V = 4;
  // argmax per frame: a a blank b
  std::vector<double> lp(4 * V, std::log(0.1));
  lp[0 * V + 1] = lp[1 * V + 1] = lp[2 * V + 0] = lp[3 * V + 2] = std::log(0.7);
  CHECK(greedy_ctc(lp, 4, V) == std::vector<TokenId>{1, 2});
  std::vector<double> blank(3 * V, std::log(0.1));
  for (std::size_t t = 0; t < 3; ++t) blank[t * V] = std::log(0.7);
  CHECK(greedy_ctc(blank, 3, V).empty());
  num::Rng rng(3);
  for (int k = 0; k < 200; ++k) {
    const std::size_t T = 1 + rng.below(8), W = 2 + rng.below(5);
    const auto r = random_logprobs(T, W, rng);
    std::vector<TokenId> best;
    for (std::size_t t = 0; t < T; ++t) {
      best.push_back(static_cast<TokenId>(std::max_element(r.begin() + t * W, r.begin() + (t + 1) * W) -
                                          (r.begin() + t * W)));
    }
    CHECK(greedy_ctc(r, T, W) == collapse(best));
  }
}

TEST_CASE("ctc prefix score") {
  num::Rng rng(11);
  SUBCASE("definitions") {
    const auto lp = random_logprobs(3, 3, rng);
    CHECK(ctc_prefix_score({}, lp, 3, 3) == 0.0);
    const auto one = random_logprobs(1, 3, rng);
    const std::vector<TokenId> aa{1, 1};
    CHECK(ctc_prefix_score(aa, one, 1, 3) == kNegInf);
    const std::vector<TokenId> ab_eos{1, 2, Vocabulary::kEos};
    const auto six = random_logprobs(2, 6, rng);
    CHECK(ctc_prefix_score(std::vector<TokenId>{1, 2, 3, Vocabulary::kEos}, six, 2, 6) == kNegInf);
    CHECK_THROWS_AS(ctc_prefix_score(std::vector<TokenId>{0}, lp, 3, 3), ValueError);
  }
  SUBCASE("complete sequences equal minus the ctc loss") {
    const auto lp = random_logprobs(3, 3, rng);
    for (const std::vector<TokenId>& y : {std::vector<TokenId>{1}, {1, 2}, {2, 2}, {1, 2, 1}, {}}) {
      std::vector<TokenId> with_eos = y;
      with_eos.push_back(Vocabulary::kEos);
      // eos id 4 lies outside V = 3 but only marks completion.
      const double s = ctc_prefix_score(with_eos, lp, 3, 3);
      const auto ref = loss::ctc_nll(lp, 3, 3, y);
      if (ref.feasible) {
        CHECK(std::abs(s + ref.nll) <= 1e-9);
      } else {
        CHECK(s == kNegInf);
      }
    }
    for (int k = 0; k < 300; ++k) {
      const std::size_t T = 1 + rng.below(7), V = 2 + rng.below(4);
      const auto r = random_logprobs(T, V, rng);
      std::vector<TokenId> y(rng.below(4));
      for (auto& c : y) c = static_cast<TokenId>(1 + rng.below(V - 1));
      const auto ref = loss::ctc_nll(r, T, V, y);
      const double s = ctc_sequence_score(y, r, T, V);
      if (ref.feasible) {
        CHECK(std::abs(s + ref.nll) <= 1e-9);
      } else {
        CHECK(s == kNegInf);
      }
    }
  }
  SUBCASE("prefix probability against path enumeration") {
    int checked = 0;
    for (int k = 0; k < 150; ++k) {
      const std::size_t T = 1 + rng.below(5), V = 2 + rng.below(3);
      const auto r = random_logprobs(T, V, rng);
      std::vector<TokenId> y(1 + rng.below(3));
      for (auto& c : y) c = static_cast<TokenId>(1 + rng.below(V - 1));
      const double want = brute_prefix(y, r, T, V, false);
      const double got = ctc_prefix_score(y, r, T, V);
      if (want == kNegInf) {
        CHECK(got == kNegInf);
      } else {
        CHECK(std::abs(got - want) <= 1e-9);
        ++checked;
      }
      const double full = brute_prefix(y, r, T, V, true);
      const double seq = ctc_sequence_score(y, r, T, V);
      if (full == kNegInf) {
        CHECK(seq == kNegInf);
      } else {
        CHECK(std::abs(seq - full) <= 1e-9);
      }
    }
    CHECK(checked > 80);
  }
}

TEST_CASE("decode config") {
  DecodeConfig c;
  CHECK(c.beam == 5);
  CHECK(c.unk_penalty == 10000.0);
  CHECK(c.no_repeat_ngram == 5);
  CHECK(c.ctc_weight == 0.2);
  CHECK(c.length_normalize);
  CHECK(c.max_len(25) == 35);
  c.beam = 0;
  CHECK_THROWS_AS(c.validate(), ValueError);
  c.beam = 2;
  c.ctc_weight = 1.5;
  CHECK_THROWS_AS(c.validate(), ValueError);
}

TEST_CASE("joint rescoring") {
  num::Rng rng(8);
  const std::size_t T = 6, V = 10;
  const auto lp = random_logprobs(T, V, rng);
  std::vector<Hypothesis> hyps;
  for (int k = 0; k < 12; ++k) {
    Hypothesis h;
    const std::size_t n = 1 + rng.below(4);
    for (std::size_t i = 0; i < n; ++i) h.tokens.push_back(static_cast<TokenId>(7 + rng.below(3)));
    h.tokens.push_back(Vocabulary::kEos);
    h.attn_logp = -rng.uniform(0.0, 10.0);
    hyps.push_back(h);
  }
  auto by = [&](auto key) {
    std::vector<std::size_t> order(hyps.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return key(a) > key(b); });
    std::vector<std::vector<TokenId>> out;
    for (std::size_t i : order) out.push_back(hyps[i].tokens);
    return out;
  };
  auto tokens_of = [](const std::vector<Hypothesis>& hs) {
    std::vector<std::vector<TokenId>> out;
    for (const auto& h : hs) out.push_back(h.tokens);
    return out;
  };
  const auto w0 = joint_rescore(hyps, lp, T, V, 0.0);
  CHECK(tokens_of(w0) == by([&](std::size_t i) { return hyps[i].attn_logp / hyps[i].tokens.size(); }));
  const auto w0raw = joint_rescore(hyps, lp, T, V, 0.0, false);
  CHECK(tokens_of(w0raw) == by([&](std::size_t i) { return hyps[i].attn_logp; }));
  const auto w1 = joint_rescore(hyps, lp, T, V, 1.0);
  CHECK(tokens_of(w1) == by([&](std::size_t i) {
          return ctc_prefix_score(hyps[i].tokens, lp, T, V) / hyps[i].tokens.size();
        }));
  for (const auto& h : joint_rescore(hyps, lp, T, V, 0.3)) {
    CHECK(h.score == doctest::Approx((0.7 * h.attn_logp + 0.3 * h.ctc_logp) / h.tokens.size()).epsilon(1e-12));
  }

  SUBCASE("a confident ctc flips the ranking") {
    // Frames spell 7 7 8 8; hypothesis A = "7 9" wins on attention by 0.5.
    std::vector<double> c(4 * V, std::log(0.01));
    auto set = [&](std::size_t t, std::size_t v) {
      c[t * V + v] = std::log(1.0 - 0.01 * (V - 1));
    };
    set(0, 7);
    set(1, 7);
    set(2, 8);
    set(3, 8);
    Hypothesis a{{7, 9, Vocabulary::kEos}, -1.0, 0.0, 0.0};
    Hypothesis b{{7, 8, Vocabulary::kEos}, -1.5, 0.0, 0.0};
    const double dctc = ctc_prefix_score(b.tokens, c, 4, V) - ctc_prefix_score(a.tokens, c, 4, V);
    REQUIRE(0.2 * dctc > 0.8 * 0.5);
    const auto r0 = joint_rescore({a, b}, c, 4, V, 0.0);
    CHECK(r0[0].tokens == a.tokens);
    const auto r2 = joint_rescore({a, b}, c, 4, V, 0.2);
    CHECK(r2[0].tokens == b.tokens);
  }
}

TEST_CASE("beam search invariants on an untrained model") {
  Fixture f;
  DecodeConfig cfg;
  const auto enc = [&] {
    num::NoGradGuard g;
    std::vector<std::size_t> idx(f.data.size()), lengths;
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    const auto feats = train::pad_features(f.data, idx, &lengths);
    return f.model.encode(feats, lengths);
  }();
  const auto mem = f.model.memory(enc);
  const auto ctc = f.model.ctc_head(enc.states, model::CtcHead::kTgt);
  const std::size_t Tp = enc.frames(), V = f.vocab.size();
  auto ctc_row = [&](std::size_t b) {
    return std::span<const double>(ctc.data().data() + b * Tp * V, enc.lengths[b] * V);
  };

  SUBCASE("beam 1 without ctc is greedy") {
    auto c = cfg;
    c.beam = 1;
    c.ctc_weight = 0.0;
    for (std::size_t b = 0; b < enc.batch(); ++b) {
      const auto hyps = beam_search(f.model, mem, b, ctc_row(b), enc.lengths[b], Lang::kEn, f.vocab, c);
      CHECK(hyps.front().tokens == greedy_decode(f.model, mem, b, enc.lengths[b], Lang::kEn, c));
    }
  }
  SUBCASE("outputs are finished, free of specials and repeated n-grams") {
    for (std::size_t ng : {5u, 2u}) {
      auto c = cfg;
      c.no_repeat_ngram = ng;
      for (std::size_t b = 0; b < enc.batch(); ++b) {
        const auto hyps = beam_search(f.model, mem, b, ctc_row(b), enc.lengths[b], Lang::kIt, f.vocab, c);
        REQUIRE(!hyps.empty());
        CHECK(hyps.size() <= c.beam);
        for (const auto& h : hyps) {
          CHECK(h.finished());
          CHECK(h.tokens.size() <= c.max_len(enc.lengths[b]));
          for (std::size_t i = 0; i + 1 < h.tokens.size(); ++i) CHECK_FALSE(Vocabulary::is_special(h.tokens[i]));
          CHECK_FALSE(has_repeated_ngram(h.tokens, ng));
          CHECK(h.score == doctest::Approx(combined_score(h.attn_logp, h.ctc_logp, h.tokens.size(), 0.2, true)));
        }
        for (std::size_t i = 1; i < hyps.size(); ++i) CHECK(hyps[i - 1].score >= hyps[i].score);
      }
    }
  }
  SUBCASE("the length cap forces eos") {
    auto c = cfg;
    c.max_len_factor = 0.0;
    c.max_len_extra = 1;
    const auto hyps = beam_search(f.model, mem, 0, ctc_row(0), enc.lengths[0], Lang::kEn, f.vocab, c);
    REQUIRE(hyps.size() == 1);
    CHECK(hyps[0].tokens == std::vector<TokenId>{Vocabulary::kEos});
  }
  SUBCASE("decoding is deterministic") {
    const auto a = beam_search(f.model, mem, 3, ctc_row(3), enc.lengths[3], Lang::kEn, f.vocab, cfg);
    const auto b = beam_search(f.model, mem, 3, ctc_row(3), enc.lengths[3], Lang::kEn, f.vocab, cfg);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].tokens == b[i].tokens);
      CHECK(a[i].score == b[i].score);
    }
  }
}

TEST_CASE("the unknown-token penalty keeps unk out") {
  Fixture f;
  // Push every decoder state towards the unk logit.
  auto& beta = param(f.model, "decoder.norm.beta");
  for (double& v : beta.data()) v = 10.0;
  auto& out = param(f.model, "decoder.out.weight");
  const std::size_t V = f.vocab.size();
  for (std::size_t r = 0; r < out.dim(0); ++r) out.data()[r * V + Vocabulary::kUnk] = 1.0;
  DecodeConfig c;
  c.unk_penalty = 0.0;
  c.no_repeat_ngram = 0;
  c.max_len_extra = 3;
  c.max_len_factor = 0.0;
  const auto with_unk = decode_dataset(f.model, f.data, Task::kAsr, f.vocab, c);
  CHECK(std::count(with_unk[0].best.tokens.begin(), with_unk[0].best.tokens.end(), Vocabulary::kUnk) == 2);
  c = DecodeConfig{};
  const auto none = decode_dataset(f.model, f.data, Task::kAsr, f.vocab, c);
  for (const auto& d : none) {
    CHECK(std::count(d.best.tokens.begin(), d.best.tokens.end(), Vocabulary::kUnk) == 0);
    CHECK(d.text.find("<unk>") == std::string::npos);
  }
}

TEST_CASE("exhaustive search oracle") {
  // Three characters beyond the specials, a few encoder frames.
  const auto vocab = Vocabulary::build(std::vector<std::string>{"ab "});
  REQUIRE(vocab.size() == 10);
  auto mc = testing::tiny_config(vocab.size());
  mc.seed = 41;
  model::FamaModel m(mc);
  auto data = testing::synth_dataset(3, 9, 1, 1);
  for (double w : {0.0, 0.2, 0.6}) {
    for (bool norm : {true, false}) {
      DecodeConfig c;
      c.ctc_weight = w;
      c.length_normalize = norm;
      c.max_len_factor = 0.0;
      c.max_len_extra = 3;
      c.unk_penalty = 1.5;
      c.beam = 5 * 5 * 5;
      for (std::size_t u = 0; u < data.size(); ++u) {
        std::vector<std::size_t> lengths;
        const std::vector<std::size_t> idx{u};
        const auto feats = train::pad_features(data, idx, &lengths);
        num::NoGradGuard g;
        const auto enc = m.encode(feats, lengths);
        REQUIRE(enc.lengths[0] <= 6);
        const auto mem = m.memory(enc);
        const auto ctc_t = m.ctc_head(enc.states, model::CtcHead::kTgt);
        const std::span<const double> ctc(ctc_t.data().data(), enc.lengths[0] * vocab.size());
        const auto got = beam_search(m, mem, 0, ctc, enc.lengths[0], Lang::kEn, vocab, c);

        // Every sequence over {unk, a, b, space} of length < 3, then eos.
        const std::vector<TokenId> alphabet{Vocabulary::kUnk, 7, 8, 9};
        double best = kNegInf;
        std::vector<TokenId> arg;
        std::vector<std::vector<TokenId>> all{{}};
        for (int len = 1; len <= 2; ++len) {
          std::vector<std::vector<TokenId>> next;
          for (const auto& s : all) {
            if (static_cast<int>(s.size()) != len - 1) continue;
            for (TokenId a : alphabet) {
              auto t = s;
              t.push_back(a);
              next.push_back(t);
            }
          }
          all.insert(all.end(), next.begin(), next.end());
        }
        for (auto seq : all) {
          seq.push_back(Vocabulary::kEos);
          std::vector<TokenId> in{Vocabulary::kBos, Vocabulary::kLangEn};
          in.insert(in.end(), seq.begin(), seq.end() - 1);
          const auto lp = m.decode(mem, in, in.size());
          double attn = 0.0;
          for (std::size_t i = 0; i < seq.size(); ++i) {
            const std::size_t pos = i + 1;
            attn += lp.data()[pos * vocab.size() + static_cast<std::size_t>(seq[i])];
            if (seq[i] == Vocabulary::kUnk) attn -= c.unk_penalty;
          }
          const double s = combined_score(attn, ctc_prefix_score(seq, ctc, enc.lengths[0], vocab.size()),
                                          seq.size(), w, norm);
          if (s > best) {
            best = s;
            arg = seq;
          }
        }
        CHECK(got.front().tokens == arg);
        CHECK(got.front().score == doctest::Approx(best).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("batched decoding matches single-utterance decoding") {
  Fixture f;
  DecodeConfig c;
  const auto single = decode_dataset(f.model, f.data, Task::kSt, f.vocab, c, 1);
  for (std::size_t bs : {2u, 5u, 8u}) {
    const auto batched = decode_dataset(f.model, f.data, Task::kSt, f.vocab, c, bs);
    REQUIRE(batched.size() == single.size());
    for (std::size_t i = 0; i < single.size(); ++i) {
      CHECK(batched[i].utt_id == single[i].utt_id);
      CHECK(batched[i].best.tokens == single[i].best.tokens);
      CHECK(batched[i].best.score == doctest::Approx(single[i].best.score).epsilon(1e-7));
    }
  }
  const auto path = std::filesystem::temp_directory_path() / "fama_decodes.jsonl";
  write_decodes(single, path);
  std::ifstream in(path);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    for (const char* k : {"utt_id", "text", "attn_logp", "ctc_logp", "score"}) CHECK(j.contains(k));
    CHECK(j.at("utt_id") == single[n].utt_id);
    ++n;
  }
  CHECK(n == single.size());
  auto missing = f.data;
  missing.utts[2].entry.tgt_lang.reset();
  missing.utts[2].entry.translation.reset();
  CHECK_THROWS_AS(decode_dataset(f.model, missing, Task::kSt, f.vocab, c), ValueError);
}
