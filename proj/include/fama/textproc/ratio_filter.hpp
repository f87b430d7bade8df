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

#include "fama/textproc/manifest.hpp"

namespace fama::text {

/// Accepted range of len_chars(transcript) / len_chars(translation) for one
/// translation direction.
struct FilterBounds {
  double r_min = 0.75;
  double r_max = 1.45;
  Lang src = Lang::kEn;
  Lang tgt = Lang::kIt;

  static FilterBounds en_it() { return {0.75, 1.45, Lang::kEn, Lang::kIt}; }
  static FilterBounds it_en() { return {0.65, 1.35, Lang::kIt, Lang::kEn}; }
  void validate() const;
};

struct FilterReport {
  std::size_t total = 0;
  std::size_t kept = 0;
  std::size_t removed = 0;       // includes zero_length
  std::size_t zero_length = 0;   // empty translations
  std::size_t other_direction = 0;  // kept untouched
  double removed_fraction = 0.0;
};

struct FilterResult {
  std::vector<ManifestEntry> kept;
  std::vector<ManifestEntry> removed;
  FilterReport report;
};

/// Length ratio in code points on the raw text. Entries of another direction
/// pass through. Every entry must carry a translation.
FilterResult ratio_filter(std::span<const ManifestEntry> entries, const FilterBounds& bounds);

}  // namespace fama::text
