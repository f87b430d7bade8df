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

#include "fama/eval/wer.hpp"

#include <sstream>

#include "fama/common.hpp"
#include "fama/textproc/normalize.hpp"

namespace fama::eval {

EditCounts align_words(std::span<const std::string> ref, std::span<const std::string> hyp) {
  const std::size_t n = ref.size(), m = hyp.size();
  std::vector<std::size_t> d((n + 1) * (m + 1));
  auto at = [&](std::size_t i, std::size_t j) -> std::size_t& { return d[i * (m + 1) + j]; };
  for (std::size_t i = 0; i <= n; ++i) at(i, 0) = i;
  for (std::size_t j = 0; j <= m; ++j) at(0, j) = j;
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      const std::size_t diag = at(i - 1, j - 1) + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      at(i, j) = std::min({diag, at(i, j - 1) + 1, at(i - 1, j) + 1});
    }
  }
  EditCounts c;
  c.ref_words = n;
  std::size_t i = n, j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0 && at(i, j) == at(i - 1, j - 1) + (ref[i - 1] == hyp[j - 1] ? 0 : 1)) {
      if (ref[i - 1] != hyp[j - 1]) ++c.substitutions;
      --i;
      --j;
    } else if (j > 0 && at(i, j) == at(i, j - 1) + 1) {
      ++c.insertions;
      --j;
    } else {
      ++c.deletions;
      --i;
    }
  }
  return c;
}

std::vector<std::string> split_words(std::string_view s) {
  std::vector<std::string> out;
  std::istringstream in{std::string(s)};
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

WerResult wer(std::span<const std::string> refs, std::span<const std::string> hyps, bool normalize) {
  if (refs.size() != hyps.size()) {
    throw ValueError("wer: " + std::to_string(refs.size()) + " references but " + std::to_string(hyps.size()) +
                     " hypotheses");
  }
  WerResult r;
  r.utterances = refs.size();
  for (std::size_t k = 0; k < refs.size(); ++k) {
    const auto ref = split_words(normalize ? text::normalize_text(refs[k]) : refs[k]);
    const auto hyp = split_words(normalize ? text::normalize_text(hyps[k]) : hyps[k]);
    const auto c = align_words(ref, hyp);
    r.counts.substitutions += c.substitutions;
    r.counts.deletions += c.deletions;
    r.counts.insertions += c.insertions;
    r.counts.ref_words += c.ref_words;
  }
  if (r.counts.ref_words == 0) throw ValueError("wer: the reference corpus has no words");
  r.wer = static_cast<double>(r.counts.errors()) / static_cast<double>(r.counts.ref_words);
  return r;
}

}  // namespace fama::eval
