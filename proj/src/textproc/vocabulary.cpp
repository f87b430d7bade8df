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

#include "fama/textproc/vocabulary.hpp"

#include <set>

#include "fama/textproc/unicode.hpp"

namespace fama::text {

const std::vector<std::string>& Vocabulary::special_tokens() {
  static const std::vector<std::string> specials = {"<blank>", "<pad>",     "<unk>",    "<s>",
                                                    "</s>",    "<lang:en>", "<lang:it>"};
  return specials;
}

Vocabulary Vocabulary::build(std::span<const std::string> corpus) {
  if (corpus.empty()) throw ValueError("build_vocab: empty corpus");
  std::set<char32_t> chars;
  for (const std::string& line : corpus) {
    for (char32_t c : utf8_decode(line)) chars.insert(c);
  }
  std::vector<std::string> tokens = special_tokens();
  for (char32_t c : chars) tokens.push_back(utf8_encode(c));
  return from_tokens(std::move(tokens));
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens) {
  const auto& specials = special_tokens();
  if (tokens.size() < specials.size() || !std::equal(specials.begin(), specials.end(), tokens.begin())) {
    throw ValueError("vocabulary: token list must start with the seven special tokens");
  }
  Vocabulary v;
  v.tokens_ = std::move(tokens);
  for (std::size_t i = 0; i < v.tokens_.size(); ++i) {
    if (i >= kNumSpecials && utf8_length(v.tokens_[i]) != 1) {
      throw ValueError("vocabulary: regular token '" + v.tokens_[i] + "' is not a single character");
    }
    if (!v.index_.emplace(v.tokens_[i], static_cast<TokenId>(i)).second) {
      throw ValueError("vocabulary: duplicate token '" + v.tokens_[i] + "'");
    }
  }
  return v;
}

const std::string& Vocabulary::token(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    throw ValueError("vocabulary: id " + std::to_string(id) + " out of range");
  }
  return tokens_[static_cast<std::size_t>(id)];
}

std::optional<TokenId> Vocabulary::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::vector<TokenId> Vocabulary::encode_chars(std::string_view text) const {
  std::vector<TokenId> ids;
  for (char32_t c : utf8_decode(text)) {
    auto it = index_.find(utf8_encode(c));
    ids.push_back(it == index_.end() || it->second < static_cast<TokenId>(kNumSpecials) ? kUnk : it->second);
  }
  return ids;
}

std::vector<TokenId> Vocabulary::encode(std::string_view text, Lang lang) const {
  std::vector<TokenId> ids{kBos, lang_token(lang)};
  auto chars = encode_chars(text);
  ids.insert(ids.end(), chars.begin(), chars.end());
  ids.push_back(kEos);
  return ids;
}

std::string Vocabulary::decode(std::span<const TokenId> ids) const {
  std::string out;
  for (TokenId id : ids) {
    if (id == kUnk) {
      out += "<unk>";
    } else if (!is_special(id)) {
      out += token(id);
    }
  }
  return out;
}

}  // namespace fama::text
