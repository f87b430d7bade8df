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

#include "fama/textproc/normalize.hpp"

#include "fama/textproc/unicode.hpp"

namespace fama::text {

std::string normalize_text(std::string_view s) {
  std::u32string out;
  bool pending_space = false;
  for (char32_t c : utf8_decode(s)) {
    if (is_punctuation(c)) continue;
    if (is_white_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(U' ');
      pending_space = false;
    }
    out.push_back(to_lower(c));
  }
  return utf8_encode(out);
}

}  // namespace fama::text
