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

#include "fama/frontend/segment.hpp"

#include <algorithm>
#include <cmath>

#include "fama/common.hpp"

namespace fama::audio {

namespace {

AudioSegment make_segment(std::span<const double> wav, std::size_t begin, std::size_t end) {
  AudioSegment seg;
  seg.samples.assign(wav.begin() + static_cast<std::ptrdiff_t>(begin), wav.begin() + static_cast<std::ptrdiff_t>(end));
  seg.start_s = static_cast<double>(begin) / kSampleRate;
  seg.end_s = static_cast<double>(end) / kSampleRate;
  return seg;
}

}  // namespace

std::vector<AudioSegment> segment_audio(std::span<const double> waveform, double target_len_s, const VadParams& vad) {
  if (!(target_len_s > 0.0)) throw ValueError("segment_audio: target length must be positive");
  const auto frame = static_cast<std::size_t>(std::lround(vad.frame_s * kSampleRate));
  if (frame == 0) throw ValueError("segment_audio: VAD frame shorter than one sample");
  const std::size_t n_frames = (waveform.size() + frame - 1) / frame;
  std::vector<double> rms(n_frames, 0.0);
  for (std::size_t f = 0; f < n_frames; ++f) {
    const std::size_t b = f * frame, e = std::min(waveform.size(), b + frame);
    double acc = 0.0;
    for (std::size_t i = b; i < e; ++i) acc += waveform[i] * waveform[i];
    rms[f] = std::sqrt(acc / static_cast<double>(e - b));
  }
  const double loudest = n_frames ? *std::max_element(rms.begin(), rms.end()) : 0.0;
  if (loudest <= 0.0) return {};
  const double threshold = vad.threshold_ratio * loudest;
  const auto min_silence = static_cast<std::size_t>(std::ceil(vad.min_silence_s / vad.frame_s - 1e-9));

  // Speech regions in frame units [begin, end).
  std::vector<std::pair<std::size_t, std::size_t>> regions;
  std::size_t f = 0, region_start = 0;
  bool in_region = false;
  while (f < n_frames) {
    if (rms[f] >= threshold) {
      if (!in_region) {
        region_start = f;
        in_region = true;
      }
      ++f;
      continue;
    }
    std::size_t run_end = f;
    while (run_end < n_frames && rms[run_end] < threshold) ++run_end;
    const bool long_silence = run_end - f >= min_silence;
    if (long_silence) {
      if (in_region) regions.emplace_back(region_start, f);
      in_region = false;
    } else if (!in_region) {
      // short leading pause belongs to the next region
      region_start = f;
      in_region = true;
    }
    f = run_end;
  }
  if (in_region) regions.emplace_back(region_start, n_frames);

  const double target_frames = target_len_s / vad.frame_s;
  std::vector<AudioSegment> segments;
  for (auto [begin, end] : regions) {
    std::size_t pos = begin;
    while (static_cast<double>(end - pos) > 1.25 * target_frames) {
      const auto lo = pos + static_cast<std::size_t>(std::ceil(0.75 * target_frames));
      const auto hi = std::min(end - 1, pos + static_cast<std::size_t>(std::floor(1.25 * target_frames)));
      const double ideal = static_cast<double>(pos) + target_frames;
      double quietest = rms[lo];
      for (std::size_t c = lo; c <= hi; ++c) quietest = std::min(quietest, rms[c]);
      // Frames within 10% of the quietest count as ties.
      const double tie = quietest * 1.1 + 1e-12;
      std::size_t cut = lo;
      double best_dist = 1e300;
      for (std::size_t c = lo; c <= hi; ++c) {
        if (rms[c] > tie) continue;
        const double dist = std::abs(static_cast<double>(c) - ideal);
        if (dist < best_dist) {
          best_dist = dist;
          cut = c;
        }
      }
      segments.push_back(make_segment(waveform, pos * frame, std::min(waveform.size(), cut * frame)));
      pos = cut;
    }
    segments.push_back(make_segment(waveform, pos * frame, std::min(waveform.size(), end * frame)));
  }
  return segments;
}

}  // namespace fama::audio
