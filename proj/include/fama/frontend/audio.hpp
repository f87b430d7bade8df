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

namespace fama::audio {

inline constexpr int kSampleRate = 16000;

/// A stretch of 16 kHz mono audio taken from [start_s, end_s) of a recording.
struct AudioSegment {
  std::vector<double> samples;
  double start_s = 0.0;
  double end_s = 0.0;
};

/// Reads PCM 16-bit little-endian mono 16 kHz WAV; other formats are rejected.
std::vector<double> read_wav(const std::filesystem::path& path);

/// Writes samples (clamped to [-1, 1]) as PCM 16-bit mono 16 kHz.
void write_wav(const std::filesystem::path& path, std::span<const double> samples);

}  // namespace fama::audio
