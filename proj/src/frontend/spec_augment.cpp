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

#include "fama/frontend/spec_augment.hpp"

#include <algorithm>

#include "fama/log.hpp"

namespace fama::audio {

namespace {

std::size_t clamp_width(std::size_t width, std::size_t extent, const char* what) {
  if (width <= extent) return width;
  warn(std::string("spec_augment: ") + what + " width " + std::to_string(width) + " exceeds axis extent " +
       std::to_string(extent) + "; clamped");
  return extent;
}

}  // namespace

SpecAugmentResult spec_augment(const FeatureMatrix& features, const SpecAugmentPolicy& policy, num::Rng& rng) {
  SpecAugmentResult result{features, {}};
  if (features.frames == 0 || (policy.num_freq_masks == 0 && policy.num_time_masks == 0)) return result;
  double fill = 0.0;
  for (double v : features.values) fill += v;
  fill /= static_cast<double>(features.values.size());

  const std::size_t max_f =
      policy.num_freq_masks ? clamp_width(policy.max_freq_width, kNumMels, "frequency mask") : 0;
  const std::size_t min_f = std::min(policy.min_freq_width, max_f);
  const std::size_t max_t =
      policy.num_time_masks ? clamp_width(policy.max_time_width, features.frames, "time mask") : 0;
  const std::size_t min_t = std::min(policy.min_time_width, max_t);

  auto draw = [&](bool freq, std::size_t lo, std::size_t hi, std::size_t extent) {
    const auto width = static_cast<std::size_t>(rng.range(static_cast<std::int64_t>(lo), static_cast<std::int64_t>(hi)));
    const auto start = static_cast<std::size_t>(rng.range(0, static_cast<std::int64_t>(extent - width)));
    if (width > 0) result.masks.push_back({freq, start, width});
  };
  for (std::size_t i = 0; i < policy.num_freq_masks; ++i) draw(true, min_f, max_f, kNumMels);
  for (std::size_t i = 0; i < policy.num_time_masks; ++i) draw(false, min_t, max_t, features.frames);

  for (const MaskBand& band : result.masks) {
    for (std::size_t t = 0; t < features.frames; ++t) {
      for (std::size_t m = 0; m < kNumMels; ++m) {
        const std::size_t pos = band.frequency ? m : t;
        if (pos >= band.start && pos < band.start + band.width) result.features.at(t, m) = fill;
      }
    }
  }
  return result;
}

SpecAugmentResult spec_augment(const FeatureMatrix& features, const SpecAugmentPolicy& policy) {
  num::Rng rng(policy.seed);
  return spec_augment(features, policy, rng);
}

}  // namespace fama::audio
