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

#include "fama/eval/xrtf.hpp"

#include <algorithm>
#include <chrono>

#include "fama/frontend/audio.hpp"
#include "fama/training/data.hpp"

namespace fama::eval {

double xrtf(double audio_seconds, double compute_seconds) {
  if (!(compute_seconds > 0.0)) throw ValueError("xrtf: compute time must be positive");
  return audio_seconds / compute_seconds;
}

TimingResult time_batches(std::size_t num_batches, const std::function<void(std::size_t)>& run) {
  if (num_batches == 0) throw ValueError("timing: nothing to run");
  run(0);  // warm-up
  const auto t0 = std::chrono::steady_clock::now();
  for (std::size_t i = 0; i < num_batches; ++i) run(i);
  TimingResult r;
  r.compute_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  r.batches = num_batches;
  return r;
}

BenchResult xrtf_bench(model::FamaModel& model, const std::vector<BenchInput>& inputs, const text::Vocabulary& vocab,
                       std::size_t batch_size, const decode::DecodeConfig& cfg,
                       const std::function<void()>& after_batch) {
  if (inputs.empty()) throw ValueError("bench: empty manifest");
  if (batch_size == 0) throw ValueError("bench: batch size must be positive");
  cfg.validate();
  BenchResult r;
  r.batch_size = batch_size;
  r.texts.resize(inputs.size());
  for (const auto& in : inputs) r.audio_seconds += static_cast<double>(in.samples.size()) / audio::kSampleRate;
  const std::size_t batches = (inputs.size() + batch_size - 1) / batch_size;
  const auto timing = time_batches(batches, [&](std::size_t b) {
    const std::size_t start = b * batch_size, n = std::min(batch_size, inputs.size() - start);
    train::Dataset chunk;
    std::vector<Lang> langs;
    for (std::size_t i = 0; i < n; ++i) {
      train::Utterance u;
      u.features = train::utterance_features(inputs[start + i].samples);
      chunk.utts.push_back(std::move(u));
      langs.push_back(inputs[start + i].lang);
    }
    std::vector<std::size_t> idx(n), lengths;
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    const auto feats = train::pad_features(chunk, idx, &lengths);
    const auto hyps = decode::decode_batch(model, feats, lengths, langs, vocab, cfg);
    for (std::size_t i = 0; i < n; ++i) r.texts[start + i] = decode::hypothesis_text(hyps[i].front(), vocab);
    if (after_batch) after_batch();
  });
  r.compute_seconds = timing.compute_seconds;
  r.xrtf = xrtf(r.audio_seconds, r.compute_seconds);
  return r;
}

}  // namespace fama::eval
