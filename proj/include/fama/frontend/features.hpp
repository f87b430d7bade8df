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

#include <span>
#include <vector>

#include "fama/frontend/audio.hpp"

namespace fama::audio {

inline constexpr std::size_t kNumMels = 80;
inline constexpr std::size_t kFrameLength = 400;  // 25 ms
inline constexpr std::size_t kFrameShift = 160;   // 10 ms
inline constexpr std::size_t kFftSize = 512;
inline constexpr double kLogFloor = 1e-10;

/// T x 80 log-mel energies, row-major (frame-major).
struct FeatureMatrix {
  std::size_t frames = 0;
  std::vector<double> values;

  double& at(std::size_t t, std::size_t m) { return values[t * kNumMels + m]; }
  double at(std::size_t t, std::size_t m) const { return values[t * kNumMels + m]; }
  bool operator==(const FeatureMatrix&) const = default;
};

/// 1 + floor((num_samples - 400) / 160); 0 below one window.
std::size_t num_frames(std::size_t num_samples);

double hz_to_mel(double hz);
double mel_to_hz(double mel);

/// 80 x 257 triangular filters on the HTK mel scale over 0-8000 Hz.
const std::vector<std::vector<double>>& mel_filterbank();

/// Hann-windowed 512-point STFT, power spectrum, mel filters, log with floor 1e-10.
FeatureMatrix extract_features(std::span<const double> samples);
FeatureMatrix extract_features(const AudioSegment& segment);

/// Per-utterance mean and variance normalization, applied per mel bin.
void normalize_utterance(FeatureMatrix& features);

}  // namespace fama::audio
