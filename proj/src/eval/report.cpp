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

#include "fama/eval/report.hpp"

#include <cstdio>
#include <utility>
#include <vector>

namespace fama::eval {

nlohmann::json EvalReport::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  if (wer) {
    j["wer"] = wer->wer;
    j["substitutions"] = wer->counts.substitutions;
    j["deletions"] = wer->counts.deletions;
    j["insertions"] = wer->counts.insertions;
    j["ref_words"] = wer->counts.ref_words;
    j["utterances"] = wer->utterances;
  }
  if (ppl_asr) j["ppl_asr"] = *ppl_asr;
  if (ppl_st) j["ppl_st"] = *ppl_st;
  if (bench) {
    j["xrtf"] = bench->xrtf;
    j["audio_seconds"] = bench->audio_seconds;
    j["compute_seconds"] = bench->compute_seconds;
    j["batch_size"] = bench->batch_size;
    j["workers"] = bench->workers;
  }
  return j;
}

std::string EvalReport::table() const {
  std::vector<std::pair<std::string, std::string>> rows;
  char buf[64];
  auto num = [&](const char* fmt, double v) {
    std::snprintf(buf, sizeof buf, fmt, v);
    return std::string(buf);
  };
  if (wer) {
    rows.emplace_back("wer", num("%.4f", wer->wer));
    rows.emplace_back("substitutions", std::to_string(wer->counts.substitutions));
    rows.emplace_back("deletions", std::to_string(wer->counts.deletions));
    rows.emplace_back("insertions", std::to_string(wer->counts.insertions));
    rows.emplace_back("ref_words", std::to_string(wer->counts.ref_words));
  }
  if (ppl_asr) rows.emplace_back("ppl_asr", num("%.4f", *ppl_asr));
  if (ppl_st) rows.emplace_back("ppl_st", num("%.4f", *ppl_st));
  if (bench) {
    rows.emplace_back("xrtf", num("%.3f", bench->xrtf));
    rows.emplace_back("audio_seconds", num("%.3f", bench->audio_seconds));
    rows.emplace_back("compute_seconds", num("%.3f", bench->compute_seconds));
    rows.emplace_back("batch_size", std::to_string(bench->batch_size));
    rows.emplace_back("workers", std::to_string(bench->workers));
  }
  std::size_t w = 0;
  for (const auto& [k, _] : rows) w = std::max(w, k.size());
  std::string out;
  for (const auto& [k, v] : rows) out += k + std::string(w - k.size() + 2, ' ') + v + '\n';
  return out;
}

}  // namespace fama::eval
