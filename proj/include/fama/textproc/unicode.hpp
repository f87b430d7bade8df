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
#include <string>
#include <string_view>
#include <vector>

namespace fama::text {

/// Decodes UTF-8; malformed sequences become U+FFFD.
std::u32string utf8_decode(std::string_view s);
std::string utf8_encode(char32_t c);
std::string utf8_encode(std::u32string_view s);

/// Number of code points.
std::size_t utf8_length(std::string_view s);

bool is_punctuation(char32_t c);
char32_t to_lower(char32_t c);
bool is_white_space(char32_t c);

}  // namespace fama::text
