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

#include "fama/frontend/synth.hpp"

#include <cmath>
#include <cstdio>
#include <set>

#include "fama/frontend/audio.hpp"
#include "fama/numcore/random.hpp"

namespace fama::audio {

namespace {

constexpr const char* kConsonants = "bdfgklmnprstvz";
constexpr const char* kVowels = "aeiou";

std::string join(const std::vector<std::string>& words, const std::vector<std::size_t>& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.push_back(' ');
    out += words[tokens[i]];
  }
  return out;
}

}  // namespace

TokenInventory TokenInventory::standard(std::size_t n) {
  const std::size_t nc = 14, nv = 5;
  if (n == 0 || n > nc * nv) throw ValueError("token inventory size must lie in [1, 70]");
  TokenInventory inv;
  for (std::size_t k = 0; k < n; ++k) {
    inv.source_words.push_back(std::string{kConsonants[k % nc], kVowels[k / nc]});
    inv.target_words.push_back(std::string{kVowels[(k / nc + 2) % nv], kConsonants[(3 * k) % nc]});
    inv.frequencies.push_back(250.0 + 180.0 * static_cast<double>(k));
  }
  return inv;
}

void TokenInventory::validate() const {
  if (source_words.empty()) throw ValueError("synth_corpus: empty token inventory");
  if (target_words.size() != source_words.size() || frequencies.size() != source_words.size()) {
    throw ValueError("synth_corpus: inventory words, translations and tones must have equal counts");
  }
  std::set<std::string> src(source_words.begin(), source_words.end());
  std::set<std::string> tgt(target_words.begin(), target_words.end());
  std::set<double> freqs(frequencies.begin(), frequencies.end());
  if (src.size() != source_words.size() || tgt.size() != target_words.size() || freqs.size() != frequencies.size()) {
    throw ValueError("synth_corpus: inventory entries must be distinct");
  }
  for (const auto& w : tgt) {
    if (src.count(w)) throw ValueError("synth_corpus: target word '" + w + "' is also a source word");
  }
  for (double f : frequencies) {
    if (!(f > 0.0 && f < kSampleRate / 2.0)) throw ValueError("synth_corpus: tone frequency outside (0, 8000) Hz");
  }
}

std::vector<double> render_tokens(const std::vector<std::size_t>& tokens, const CorpusSpec& spec) {
  const auto per_token = static_cast<std::size_t>(std::lround(spec.token_s * kSampleRate));
  const auto fade = static_cast<std::size_t>(std::lround(spec.fade_s * kSampleRate));
  std::vector<double> samples(tokens.size() * per_token, 0.0);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const double f = spec.inventory.frequencies.at(tokens[i]);
    for (std::size_t n = 0; n < per_token; ++n) {
      double gain = spec.amplitude;
      if (n < fade) gain *= 0.5 - 0.5 * std::cos(M_PI * static_cast<double>(n) / static_cast<double>(fade));
      if (per_token - 1 - n < fade) {
        gain *= 0.5 - 0.5 * std::cos(M_PI * static_cast<double>(per_token - 1 - n) / static_cast<double>(fade));
      }
      const double t = static_cast<double>(n) / kSampleRate;
      samples[i * per_token + n] = gain * std::sin(2.0 * M_PI * f * t);
    }
  }
  return samples;
}

std::vector<SynthUtterance> synth_corpus(const CorpusSpec& spec) {
  spec.inventory.validate();
  if (spec.min_tokens == 0 || spec.min_tokens > spec.max_tokens) {
    throw ValueError("synth_corpus: token range must satisfy 1 <= min_tokens <= max_tokens");
  }
  if (spec.src_lang == spec.tgt_lang) throw ValueError("synth_corpus: source and target language must differ");
  num::Rng rng(spec.seed);
  std::vector<SynthUtterance> corpus;
  corpus.reserve(spec.num_utts);
  const std::size_t vocab = spec.inventory.source_words.size();
  for (std::size_t u = 0; u < spec.num_utts; ++u) {
    SynthUtterance utt;
    char id[64];
    std::snprintf(id, sizeof(id), "%s_%04zu", spec.id_prefix.c_str(), u);
    utt.id = id;
    const auto n = static_cast<std::size_t>(
        rng.range(static_cast<std::int64_t>(spec.min_tokens), static_cast<std::int64_t>(spec.max_tokens)));
    for (std::size_t i = 0; i < n; ++i) utt.tokens.push_back(rng.below(vocab));
    utt.samples = render_tokens(utt.tokens, spec);
    utt.entry.audio = "wav/" + utt.id + ".wav";
    utt.entry.duration_s = static_cast<double>(utt.samples.size()) / kSampleRate;
    utt.entry.src_lang = spec.src_lang;
    utt.entry.transcript = join(spec.inventory.source_words, utt.tokens);
    utt.entry.translation = join(spec.inventory.target_words, utt.tokens);
    utt.entry.tgt_lang = spec.tgt_lang;
    utt.entry.extra["id"] = utt.id;
    corpus.push_back(std::move(utt));
  }
  return corpus;
}

std::filesystem::path write_corpus(const std::vector<SynthUtterance>& corpus, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir / "wav");
  std::vector<text::ManifestEntry> entries;
  for (const auto& utt : corpus) {
    write_wav(dir / utt.entry.audio, utt.samples);
    entries.push_back(utt.entry);
  }
  const auto manifest = dir / "manifest.jsonl";
  text::save_manifest(entries, manifest);
  return manifest;
}

}  // namespace fama::audio
