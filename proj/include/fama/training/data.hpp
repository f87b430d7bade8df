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

#include <filesystem>
#include <span>
#include <vector>

#include "fama/common.hpp"
#include "fama/frontend/features.hpp"
#include "fama/frontend/spec_augment.hpp"
#include "fama/losses/combined.hpp"
#include "fama/numcore/random.hpp"
#include "fama/numcore/tensor.hpp"
#include "fama/textproc/manifest.hpp"
#include "fama/textproc/vocabulary.hpp"

namespace fama::train {

struct Utterance {
  std::string id;
  text::ManifestEntry entry;
  audio::FeatureMatrix features;  // normalised log-mel
  double audio_seconds = 0.0;
};

struct Dataset {
  std::vector<Utterance> utts;
  std::size_t size() const { return utts.size(); }
  bool empty() const { return utts.empty(); }
};

/// Normalised features of one waveform.
audio::FeatureMatrix utterance_features(std::span<const double> samples);

/// Reads every manifest entry's audio and extracts features.
Dataset load_dataset(const std::filesystem::path& manifest);

/// Decoder tokens an utterance can contribute: the longer target plus eos.
std::size_t target_tokens(const text::ManifestEntry& entry);

/// Sorts by frame count, fills batches up to `batch_tokens` target tokens
/// (a longer single utterance still gets its own batch), then shuffles the
/// batch order with `rng`.
std::vector<std::vector<std::size_t>> make_batches(const Dataset& data, std::size_t batch_tokens, num::Rng& rng);

/// Bernoulli(p_asr) choice between the two targets.
Task sample_task(num::Rng& rng, double p_asr);

/// Zero-padded [B, T, 80] features of the listed utterances.
num::Tensor pad_features(const Dataset& data, std::span<const std::size_t> indices,
                         std::vector<std::size_t>* lengths = nullptr);

struct Batch {
  num::Tensor features;  // [B, T, 80], zero padded
  std::vector<std::size_t> lengths;
  loss::LossTargets targets;
  std::vector<std::size_t> indices;
  double audio_seconds = 0.0;
};

/// Spec augmentation applied per utterance when `augment` is set; the time
/// mask cap shrinks to a fifth of short utterances.
struct AugmentOptions {
  bool enabled = false;
  audio::SpecAugmentPolicy policy;
};

Batch collate(const Dataset& data, std::span<const std::size_t> indices, std::span<const Task> tasks,
              const text::Vocabulary& vocab, const AugmentOptions& augment = {}, num::Rng* rng = nullptr);

/// Every transcript and translation, for building a vocabulary.
std::vector<std::string> corpus_texts(const Dataset& data);

}  // namespace fama::train
