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
#include <vector>

#include "fama/frontend/features.hpp"
#include "fama/numcore/random.hpp"

namespace fama::audio {

/// Band widths are drawn uniformly from [min_*_width, max_*_width].
struct SpecAugmentPolicy {
  std::size_t num_freq_masks = 2;
  std::size_t max_freq_width = 27;
  std::size_t min_freq_width = 0;
  std::size_t num_time_masks = 2;
  std::size_t max_time_width = 100;
  std::size_t min_time_width = 0;
  std::uint64_t seed = 0;
};

struct MaskBand {
  bool frequency = false;  // frequency axis when true, time axis otherwise
  std::size_t start = 0;
  std::size_t width = 0;
};

struct SpecAugmentResult {
  FeatureMatrix features;
  std::vector<MaskBand> masks;
};

/// Replaces the drawn bands with the utterance mean. Widths larger than the
/// axis are clamped with a warning. Draws from `rng`.
SpecAugmentResult spec_augment(const FeatureMatrix& features, const SpecAugmentPolicy& policy, num::Rng& rng);

/// Same, seeded from policy.seed.
SpecAugmentResult spec_augment(const FeatureMatrix& features, const SpecAugmentPolicy& policy);

}  // namespace fama::audio
