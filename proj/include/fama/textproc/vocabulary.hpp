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
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "fama/common.hpp"

namespace fama::text {

using TokenId = std::int32_t;

/// Character-level vocabulary. Ids are dense from 0; the seven specials come
/// first, in the order below, followed by the sorted distinct code points of
/// the corpus.
class Vocabulary {
 public:
  static constexpr TokenId kBlank = 0;
  static constexpr TokenId kPad = 1;
  static constexpr TokenId kUnk = 2;
  static constexpr TokenId kBos = 3;
  static constexpr TokenId kEos = 4;
  static constexpr TokenId kLangEn = 5;
  static constexpr TokenId kLangIt = 6;
  static constexpr std::size_t kNumSpecials = 7;

  static const std::vector<std::string>& special_tokens();

  /// Builds from transcripts and translations. Rejects an empty corpus.
  static Vocabulary build(std::span<const std::string> corpus);

  /// Restores a vocabulary from its full token list (specials included).
  static Vocabulary from_tokens(std::vector<std::string> tokens);

  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  const std::string& token(TokenId id) const;
  std::optional<TokenId> find(std::string_view token) const;

  static TokenId lang_token(Lang lang) { return lang == Lang::kEn ? kLangEn : kLangIt; }
  static bool is_special(TokenId id) { return id >= 0 && static_cast<std::size_t>(id) < kNumSpecials; }

  /// [bos, <lang:lang>, chars..., eos]; characters outside the vocabulary map to unk.
  std::vector<TokenId> encode(std::string_view text, Lang lang) const;

  /// Character ids only (no bos/lang/eos), as used for CTC targets.
  std::vector<TokenId> encode_chars(std::string_view text) const;

  /// Text of the regular tokens; unk renders as "<unk>", other specials are dropped.
  std::string decode(std::span<const TokenId> ids) const;

  bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
};

}  // namespace fama::text
