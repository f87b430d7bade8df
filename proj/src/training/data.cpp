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

#include "fama/training/data.hpp"

#include <algorithm>
#include <numeric>

#include "fama/frontend/audio.hpp"
#include "fama/textproc/unicode.hpp"

namespace fama::train {

audio::FeatureMatrix utterance_features(std::span<const double> samples) {
  auto f = audio::extract_features(samples);
  audio::normalize_utterance(f);
  return f;
}

Dataset load_dataset(const std::filesystem::path& manifest) {
  Dataset d;
  for (auto& e : text::load_manifest(manifest)) {
    Utterance u;
    u.id = text::utterance_id(e);
    const auto samples = audio::read_wav(text::resolve_audio(manifest, e));
    u.audio_seconds = static_cast<double>(samples.size()) / audio::kSampleRate;
    u.features = utterance_features(samples);
    u.entry = std::move(e);
    d.utts.push_back(std::move(u));
  }
  return d;
}

std::size_t target_tokens(const text::ManifestEntry& entry) {
  std::size_t n = text::utf8_length(entry.transcript);
  if (entry.translation) n = std::max(n, text::utf8_length(*entry.translation));
  return n + 1;
}

std::vector<std::vector<std::size_t>> make_batches(const Dataset& data, std::size_t batch_tokens, num::Rng& rng) {
  if (data.empty()) throw ValueError("make_batches: empty dataset");
  if (batch_tokens == 0) throw ValueError("make_batches: batch_tokens must be positive");
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return data.utts[a].features.frames < data.utts[b].features.frames;
  });
  std::vector<std::vector<std::size_t>> batches;
  std::vector<std::size_t> cur;
  std::size_t tokens = 0;
  for (std::size_t i : order) {
    const std::size_t n = target_tokens(data.utts[i].entry);
    if (!cur.empty() && tokens + n > batch_tokens) {
      batches.push_back(std::move(cur));
      cur.clear();
      tokens = 0;
    }
    cur.push_back(i);
    tokens += n;
  }
  if (!cur.empty()) batches.push_back(std::move(cur));
  rng.shuffle(batches.begin(), batches.end());
  return batches;
}

Task sample_task(num::Rng& rng, double p_asr) {
  if (!(p_asr >= 0.0 && p_asr <= 1.0)) throw ValueError("sample_task: p_asr must lie in [0, 1]");
  return rng.bernoulli(p_asr) ? Task::kAsr : Task::kSt;
}

num::Tensor pad_features(const Dataset& data, std::span<const std::size_t> indices,
                         std::vector<std::size_t>* lengths) {
  if (indices.empty()) throw ValueError("pad_features: empty batch");
  std::size_t T = 0;
  for (std::size_t i : indices) T = std::max(T, data.utts.at(i).features.frames);
  const std::size_t M = audio::kNumMels;
  std::vector<double> values(indices.size() * T * M, 0.0);
  if (lengths) lengths->clear();
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const auto& f = data.utts[indices[r]].features;
    std::copy(f.values.begin(), f.values.end(), values.begin() + static_cast<std::ptrdiff_t>(r * T * M));
    if (lengths) lengths->push_back(f.frames);
  }
  return num::Tensor::from({indices.size(), T, M}, std::move(values));
}

Batch collate(const Dataset& data, std::span<const std::size_t> indices, std::span<const Task> tasks,
              const text::Vocabulary& vocab, const AugmentOptions& augment, num::Rng* rng) {
  if (indices.empty()) throw ValueError("collate: empty batch");
  if (augment.enabled && !rng) throw ValueError("collate: augmentation needs a random generator");
  Batch b;
  b.indices.assign(indices.begin(), indices.end());
  std::size_t T = 0;
  for (std::size_t i : indices) T = std::max(T, data.utts.at(i).features.frames);
  const std::size_t M = audio::kNumMels;
  std::vector<double> values(indices.size() * T * M, 0.0);
  std::vector<const text::ManifestEntry*> entries;
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const Utterance& u = data.utts[indices[r]];
    const audio::FeatureMatrix* f = &u.features;
    audio::SpecAugmentResult aug;
    if (augment.enabled) {
      auto policy = augment.policy;
      policy.max_time_width = std::min(policy.max_time_width, u.features.frames / 5);
      policy.min_time_width = std::min(policy.min_time_width, policy.max_time_width);
      aug = audio::spec_augment(u.features, policy, *rng);
      f = &aug.features;
    }
    std::copy(f->values.begin(), f->values.end(), values.begin() + static_cast<std::ptrdiff_t>(r * T * M));
    b.lengths.push_back(f->frames);
    entries.push_back(&u.entry);
    b.audio_seconds += u.audio_seconds;
  }
  b.features = num::Tensor::from({indices.size(), T, M}, std::move(values));
  b.targets = loss::make_loss_targets(entries, tasks, vocab);
  return b;
}

std::vector<std::string> corpus_texts(const Dataset& data) {
  std::vector<std::string> out;
  for (const auto& u : data.utts) {
    out.push_back(u.entry.transcript);
    if (u.entry.translation) out.push_back(*u.entry.translation);
  }
  return out;
}

}  // namespace fama::train
