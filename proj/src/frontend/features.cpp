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

#include "fama/frontend/features.hpp"

#include <algorithm>
#include <cmath>

#include "fama/common.hpp"
#include "fama/frontend/fft.hpp"

namespace fama::audio {

std::size_t num_frames(std::size_t num_samples) {
  if (num_samples < kFrameLength) return 0;
  return 1 + (num_samples - kFrameLength) / kFrameShift;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

const std::vector<std::vector<double>>& mel_filterbank() {
  static const std::vector<std::vector<double>> bank = [] {
    const std::size_t bins = kFftSize / 2 + 1;
    const double max_mel = hz_to_mel(kSampleRate / 2.0);
    std::vector<double> edges(kNumMels + 2);
    for (std::size_t i = 0; i < edges.size(); ++i) {
      edges[i] = mel_to_hz(max_mel * static_cast<double>(i) / static_cast<double>(kNumMels + 1));
    }
    std::vector<std::vector<double>> filters(kNumMels, std::vector<double>(bins, 0.0));
    for (std::size_t m = 0; m < kNumMels; ++m) {
      const double lo = edges[m], center = edges[m + 1], hi = edges[m + 2];
      for (std::size_t k = 0; k < bins; ++k) {
        const double f = static_cast<double>(k) * kSampleRate / static_cast<double>(kFftSize);
        if (f > lo && f < center) {
          filters[m][k] = (f - lo) / (center - lo);
        } else if (f >= center && f < hi) {
          filters[m][k] = (hi - f) / (hi - center);
        }
      }
    }
    return filters;
  }();
  return bank;
}

FeatureMatrix extract_features(std::span<const double> samples) {
  if (samples.size() < kFrameLength) {
    throw ValueError("extract_features: need at least " + std::to_string(kFrameLength) + " samples (25 ms), got " +
                     std::to_string(samples.size()));
  }
  static const std::vector<double> window = [] {
    std::vector<double> w(kFrameLength);
    for (std::size_t n = 0; n < kFrameLength; ++n) {
      w[n] = 0.5 - 0.5 * std::cos(2.0 * M_PI * static_cast<double>(n) / static_cast<double>(kFrameLength - 1));
    }
    return w;
  }();
  const auto& bank = mel_filterbank();
  FeatureMatrix out;
  out.frames = num_frames(samples.size());
  out.values.resize(out.frames * kNumMels);
  std::vector<double> frame(kFrameLength);
  for (std::size_t t = 0; t < out.frames; ++t) {
    for (std::size_t n = 0; n < kFrameLength; ++n) frame[n] = samples[t * kFrameShift + n] * window[n];
    const auto power = power_spectrum(frame, kFftSize);
    for (std::size_t m = 0; m < kNumMels; ++m) {
      double e = 0.0;
      for (std::size_t k = 0; k < power.size(); ++k) e += bank[m][k] * power[k];
      out.at(t, m) = std::log(std::max(e, kLogFloor));
    }
  }
  return out;
}

FeatureMatrix extract_features(const AudioSegment& segment) { return extract_features(segment.samples); }

void normalize_utterance(FeatureMatrix& features) {
  if (features.frames == 0) return;
  for (std::size_t m = 0; m < kNumMels; ++m) {
    double mu = 0.0;
    for (std::size_t t = 0; t < features.frames; ++t) mu += features.at(t, m);
    mu /= static_cast<double>(features.frames);
    double var = 0.0;
    for (std::size_t t = 0; t < features.frames; ++t) var += (features.at(t, m) - mu) * (features.at(t, m) - mu);
    var /= static_cast<double>(features.frames);
    const double inv = 1.0 / std::sqrt(var + 1e-8);
    for (std::size_t t = 0; t < features.frames; ++t) features.at(t, m) = (features.at(t, m) - mu) * inv;
  }
}

}  // namespace fama::audio
