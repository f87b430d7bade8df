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

#include "fama/decoding/beam_search.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <tuple>

#include "fama/decoding/ctc_prefix.hpp"
#include "fama/numcore/autograd.hpp"
#include "fama/training/data.hpp"

namespace fama::decode {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
using Vocab = text::Vocabulary;

// Restores the training flag on scope exit.
struct EvalMode {
  model::FamaModel& m;
  bool was;
  explicit EvalMode(model::FamaModel& model) : m(model), was(model.training()) { m.set_training(false); }
  ~EvalMode() { m.set_training(was); }
};

// Next-token scores after masking. `gen` are the generated tokens so far.
void mask_scores(std::span<double> lp, std::span<const TokenId> gen, std::size_t max_len, double unk_penalty,
                 std::size_t no_repeat) {
  const double eos_raw = lp[Vocab::kEos];
  for (TokenId s : {Vocab::kBlank, Vocab::kPad, Vocab::kBos, Vocab::kLangEn, Vocab::kLangIt}) lp[s] = kNegInf;
  lp[Vocab::kUnk] -= unk_penalty;
  if (no_repeat > 0 && gen.size() + 1 >= no_repeat) {
    const std::size_t n = no_repeat, t = gen.size();
    // Tokens completing an n-gram already present in gen.
    for (std::size_t i = 0; i + n <= t; ++i) {
      if (std::equal(gen.begin() + static_cast<std::ptrdiff_t>(i), gen.begin() + static_cast<std::ptrdiff_t>(i + n - 1),
                     gen.begin() + static_cast<std::ptrdiff_t>(t - n + 1))) {
        lp[static_cast<std::size_t>(gen[i + n - 1])] = kNegInf;
      }
    }
  }
  if (gen.size() + 1 >= max_len) {
    for (std::size_t v = 0; v < lp.size(); ++v) {
      if (v != static_cast<std::size_t>(Vocab::kEos)) lp[v] = kNegInf;
    }
  }
  if (std::none_of(lp.begin(), lp.end(), [](double v) { return v > kNegInf; })) lp[Vocab::kEos] = eos_raw;
}

// Last-position decoder log-probs for equal-length prefixes, [n * V].
std::vector<double> next_logprobs(model::FamaModel& model, const model::DecoderMemory& mem, std::size_t row,
                                  const std::vector<std::vector<TokenId>>& prefixes) {
  const std::size_t n = prefixes.size(), len = prefixes.front().size();
  std::vector<TokenId> tokens;
  tokens.reserve(n * len);
  for (const auto& p : prefixes) tokens.insert(tokens.end(), p.begin(), p.end());
  const std::vector<std::size_t> rows(n, row);
  const auto lp = model.decode(mem.select(rows), tokens, len);
  const std::size_t V = lp.dim(2);
  std::vector<double> out(n * V);
  const auto d = lp.data();
  for (std::size_t i = 0; i < n; ++i) {
    std::copy_n(d.begin() + static_cast<std::ptrdiff_t>((i * len + len - 1) * V), V,
                out.begin() + static_cast<std::ptrdiff_t>(i * V));
  }
  return out;
}

}  // namespace

void DecodeConfig::validate() const {
  if (beam < 1) throw ValueError("decode config: beam must be >= 1");
  if (!(ctc_weight >= 0.0 && ctc_weight <= 1.0)) throw ValueError("decode config: ctc_weight must lie in [0, 1]");
  if (!(unk_penalty >= 0.0)) throw ValueError("decode config: unk_penalty must be non-negative");
  if (!(max_len_factor >= 0.0)) throw ValueError("decode config: max_len_factor must be non-negative");
}

std::size_t DecodeConfig::max_len(std::size_t frames) const {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(max_len_factor * static_cast<double>(frames))) +
                                      max_len_extra);
}

nlohmann::json DecodeConfig::to_json() const {
  return {{"beam", beam},
          {"unk_penalty", unk_penalty},
          {"no_repeat_ngram", no_repeat_ngram},
          {"ctc_weight", ctc_weight},
          {"max_len_factor", max_len_factor},
          {"max_len_extra", max_len_extra},
          {"length_normalize", length_normalize}};
}

double combined_score(double attn_logp, double ctc_logp, std::size_t length, double w, bool length_normalize) {
  // Keep w = 0 independent of an unreachable CTC score.
  double s = w == 0.0 ? attn_logp : w == 1.0 ? ctc_logp : (1.0 - w) * attn_logp + w * ctc_logp;
  if (length_normalize && length > 0) s /= static_cast<double>(length);
  return s;
}

std::vector<Hypothesis> joint_rescore(std::vector<Hypothesis> hyps, std::span<const double> ctc_lp,
                                      std::size_t frames, std::size_t vocab, double w, bool length_normalize) {
  for (auto& h : hyps) {
    h.ctc_logp = ctc_prefix_score(h.tokens, ctc_lp, frames, vocab);
    h.score = combined_score(h.attn_logp, h.ctc_logp, h.tokens.size(), w, length_normalize);
  }
  std::stable_sort(hyps.begin(), hyps.end(), [](const Hypothesis& a, const Hypothesis& b) { return a.score > b.score; });
  return hyps;
}

std::vector<Hypothesis> beam_search(model::FamaModel& model, const model::DecoderMemory& mem, std::size_t row,
                                    std::span<const double> ctc_lp, std::size_t frames, Lang lang,
                                    const text::Vocabulary& vocab, const DecodeConfig& cfg) {
  cfg.validate();
  if (row >= mem.batch()) throw ValueError("beam_search: row out of range");
  num::NoGradGuard no_grad;
  EvalMode eval(model);
  const std::size_t V = vocab.size();
  const std::size_t max_len = cfg.max_len(frames);
  struct Active {
    std::vector<TokenId> gen;
    double attn;
  };
  std::vector<Active> active{{{}, 0.0}};
  std::vector<Hypothesis> finished;
  while (!active.empty() && finished.size() < cfg.beam) {
    std::vector<std::vector<TokenId>> prefixes;
    for (const auto& a : active) {
      std::vector<TokenId> p{Vocab::kBos, Vocab::lang_token(lang)};
      p.insert(p.end(), a.gen.begin(), a.gen.end());
      prefixes.push_back(std::move(p));
    }
    auto lp = next_logprobs(model, mem, row, prefixes);
    // (score, hypothesis, token); best first, ties by hypothesis then token.
    std::vector<std::tuple<double, std::size_t, TokenId>> cand;
    for (std::size_t h = 0; h < active.size(); ++h) {
      std::span<double> row_lp(lp.data() + h * V, V);
      mask_scores(row_lp, active[h].gen, max_len, cfg.unk_penalty, cfg.no_repeat_ngram);
      for (std::size_t v = 0; v < V; ++v) {
        if (row_lp[v] > kNegInf) cand.emplace_back(active[h].attn + row_lp[v], h, static_cast<TokenId>(v));
      }
    }
    const auto better = [](const auto& a, const auto& b) {
      if (std::get<0>(a) != std::get<0>(b)) return std::get<0>(a) > std::get<0>(b);
      if (std::get<1>(a) != std::get<1>(b)) return std::get<1>(a) < std::get<1>(b);
      return std::get<2>(a) < std::get<2>(b);
    };
    const std::size_t keep = std::min(cand.size(), 2 * cfg.beam);
    std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(keep), cand.end(), better);
    std::vector<Active> next;
    for (std::size_t i = 0; i < keep; ++i) {
      const auto& [score, h, tok] = cand[i];
      if (tok == Vocab::kEos) {
        if (i < cfg.beam && finished.size() < cfg.beam) {
          Hypothesis hyp;
          hyp.tokens = active[h].gen;
          hyp.tokens.push_back(tok);
          hyp.attn_logp = score;
          finished.push_back(std::move(hyp));
        }
      } else if (next.size() < cfg.beam) {
        auto gen = active[h].gen;
        gen.push_back(tok);
        next.push_back({std::move(gen), score});
      }
    }
    active = std::move(next);
  }
  return joint_rescore(std::move(finished), ctc_lp, frames, V, cfg.ctc_weight, cfg.length_normalize);
}

std::vector<TokenId> greedy_decode(model::FamaModel& model, const model::DecoderMemory& mem, std::size_t row,
                                   std::size_t frames, Lang lang, const DecodeConfig& cfg) {
  cfg.validate();
  const std::size_t max_len = cfg.max_len(frames);
  num::NoGradGuard no_grad;
  EvalMode eval(model);
  std::vector<TokenId> gen;
  while (true) {
    std::vector<TokenId> p{Vocab::kBos, Vocab::lang_token(lang)};
    p.insert(p.end(), gen.begin(), gen.end());
    auto lp = next_logprobs(model, mem, row, {p});
    mask_scores(lp, gen, max_len, cfg.unk_penalty, cfg.no_repeat_ngram);
    const auto best = static_cast<TokenId>(std::max_element(lp.begin(), lp.end()) - lp.begin());
    gen.push_back(best);
    if (best == Vocab::kEos) return gen;
  }
}

std::vector<std::vector<Hypothesis>> decode_batch(model::FamaModel& model, const num::Tensor& features,
                                                  std::span<const std::size_t> lengths, std::span<const Lang> langs,
                                                  const text::Vocabulary& vocab, const DecodeConfig& cfg) {
  if (langs.size() != lengths.size()) throw ValueError("decode: one output language per utterance is required");
  num::NoGradGuard no_grad;
  EvalMode eval(model);
  const auto enc = model.encode(features, lengths);
  const auto mem = model.memory(enc);
  const auto ctc = model.ctc_head(enc.states, model::CtcHead::kTgt);
  const std::size_t Tp = enc.frames(), V = vocab.size();
  std::vector<std::vector<Hypothesis>> out;
  for (std::size_t b = 0; b < enc.batch(); ++b) {
    std::span<const double> lp(ctc.data().data() + b * Tp * V, enc.lengths[b] * V);
    out.push_back(beam_search(model, mem, b, lp, enc.lengths[b], langs[b], vocab, cfg));
  }
  return out;
}

std::string hypothesis_text(const Hypothesis& h, const text::Vocabulary& vocab) {
  std::span<const TokenId> t(h.tokens);
  if (h.finished()) t = t.first(t.size() - 1);
  return vocab.decode(t);
}

nlohmann::json DecodedUtterance::to_json() const {
  return {{"utt_id", utt_id}, {"text", text}, {"attn_logp", best.attn_logp}, {"ctc_logp", best.ctc_logp},
          {"score", best.score}};
}

std::vector<DecodedUtterance> decode_dataset(model::FamaModel& model, const train::Dataset& data, Task task,
                                             const text::Vocabulary& vocab, const DecodeConfig& cfg,
                                             std::size_t batch_size) {
  if (data.empty()) throw ValueError("decode: empty manifest");
  if (batch_size == 0) throw ValueError("decode: batch size must be positive");
  std::vector<DecodedUtterance> out;
  for (std::size_t start = 0; start < data.size(); start += batch_size) {
    const std::size_t n = std::min(batch_size, data.size() - start);
    std::vector<std::size_t> idx(n);
    std::vector<Lang> langs;
    for (std::size_t i = 0; i < n; ++i) {
      idx[i] = start + i;
      const auto& e = data.utts[idx[i]].entry;
      if (task == Task::kSt && !e.tgt_lang) {
        throw ValueError("decode: utterance '" + data.utts[idx[i]].id + "' has no target language");
      }
      langs.push_back(task == Task::kAsr ? e.src_lang : *e.tgt_lang);
    }
    std::vector<std::size_t> lengths;
    const auto feats = train::pad_features(data, idx, &lengths);
    const auto hyps = decode_batch(model, feats, lengths, langs, vocab, cfg);
    for (std::size_t i = 0; i < n; ++i) {
      DecodedUtterance d;
      d.utt_id = data.utts[idx[i]].id;
      d.best = hyps[i].front();
      d.text = hypothesis_text(d.best, vocab);
      out.push_back(std::move(d));
    }
  }
  return out;
}

void write_decodes(const std::vector<DecodedUtterance>& decodes, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write decode output " + path.string());
  for (const auto& d : decodes) out << d.to_json().dump() << '\n';
}

}  // namespace fama::decode
