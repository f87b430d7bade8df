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

/// Energy voice-activity parameters. Frames are non-overlapping windows of
/// frame_s; a frame is silent when its RMS is below threshold_ratio times the
/// loudest frame's RMS.
struct VadParams {
  double frame_s = 0.025;
  double threshold_ratio = 0.02;
  double min_silence_s = 0.3;
};

/// Drops silent runs of at least min_silence_s and cuts the remaining speech
/// greedily: while more than 1.25 x target remains, cut at the quietest frame
/// boundary in [0.75, 1.25] x target from the current start (near-ties go to
/// the boundary closest to target). Segments are ordered, non-overlapping
/// copies of the input.
std::vector<AudioSegment> segment_audio(std::span<const double> waveform, double target_len_s = 16.0,
                                        const VadParams& vad = {});

}  // namespace fama::audio
