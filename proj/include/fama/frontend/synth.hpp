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
#include <filesystem>
#include <string>
#include <vector>

#include "fama/common.hpp"
#include "fama/textproc/manifest.hpp"

namespace fama::audio {

/// Pseudo-word inventory. Source word k is rendered as a tone at
/// frequencies[k]; its translation is target_words[k].
struct TokenInventory {
  std::vector<std::string> source_words;
  std::vector<std::string> target_words;
  std::vector<double> frequencies;

  /// n distinct consonant-vowel source words, vowel-consonant targets,
  /// and tones spaced 180 Hz apart from 250 Hz.
  static TokenInventory standard(std::size_t n);
  void validate() const;
};

struct CorpusSpec {
  std::size_t num_utts = 32;
  TokenInventory inventory = TokenInventory::standard(16);
  std::size_t min_tokens = 4;  // utterance length range in tokens
  std::size_t max_tokens = 8;
  std::uint64_t seed = 0;
  double token_s = 0.2;
  double amplitude = 0.5;
  double fade_s = 0.01;
  Lang src_lang = Lang::kEn;
  Lang tgt_lang = Lang::kIt;
  std::string id_prefix = "utt";
};

struct SynthUtterance {
  std::string id;
  std::vector<std::size_t> tokens;  // inventory indices
  std::vector<double> samples;
  text::ManifestEntry entry;        // audio = "wav/<id>.wav"
};

/// Tone sequence of the given inventory indices.
std::vector<double> render_tokens(const std::vector<std::size_t>& tokens, const CorpusSpec& spec);

/// Seeded corpus; each utterance concatenates 0.2 s tones, its transcript is
/// the space-joined source words and its translation the mapped target words.
std::vector<SynthUtterance> synth_corpus(const CorpusSpec& spec);

/// Writes wav/<id>.wav files and manifest.jsonl under `dir`; returns the manifest path.
std::filesystem::path write_corpus(const std::vector<SynthUtterance>& corpus, const std::filesystem::path& dir);

}  // namespace fama::audio
