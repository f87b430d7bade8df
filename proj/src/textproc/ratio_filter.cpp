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

#include "fama/textproc/ratio_filter.hpp"

#include "fama/textproc/unicode.hpp"

namespace fama::text {

void FilterBounds::validate() const {
  if (!(r_min > 0.0 && r_min < r_max)) throw ValueError("filter bounds must satisfy 0 < r_min < r_max");
  if (src == tgt) throw ValueError("filter direction must pair two different languages");
}

FilterResult ratio_filter(std::span<const ManifestEntry> entries, const FilterBounds& bounds) {
  bounds.validate();
  FilterResult result;
  result.report.total = entries.size();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const ManifestEntry& e = entries[i];
    if (!e.translation) {
      throw ValueError("ratio_filter: entry " + std::to_string(i + 1) + " has no translation");
    }
    if (e.src_lang != bounds.src || e.tgt_lang != bounds.tgt) {
      ++result.report.other_direction;
      result.kept.push_back(e);
      continue;
    }
    const std::size_t tgt_len = utf8_length(*e.translation);
    if (tgt_len == 0) {
      ++result.report.zero_length;
      result.removed.push_back(e);
      continue;
    }
    const double r = static_cast<double>(utf8_length(e.transcript)) / static_cast<double>(tgt_len);
    if (r >= bounds.r_min && r <= bounds.r_max) {
      result.kept.push_back(e);
    } else {
      result.removed.push_back(e);
    }
  }
  result.report.kept = result.kept.size();
  result.report.removed = result.removed.size();
  result.report.removed_fraction =
      entries.empty() ? 0.0 : static_cast<double>(result.report.removed) / static_cast<double>(entries.size());
  return result;
}

}  // namespace fama::text
