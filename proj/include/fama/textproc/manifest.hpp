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

#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fama/common.hpp"
#include "json.hpp"

namespace fama::text {

/// One utterance of a line-delimited JSON manifest. Keys other than the six
/// known ones are carried in `extra` and written back unchanged.
struct ManifestEntry {
  std::string audio;
  double duration_s = 0.0;
  Lang src_lang = Lang::kEn;
  std::string transcript;
  std::optional<std::string> translation;
  std::optional<Lang> tgt_lang;
  nlohmann::json extra = nlohmann::json::object();

  bool operator==(const ManifestEntry&) const = default;
};

/// Checks duration_s > 0, translation <=> tgt_lang and tgt_lang != src_lang.
void validate_entry(const ManifestEntry& entry);

ManifestEntry parse_manifest_line(const std::string& line, std::size_t line_no);
std::string format_manifest_line(const ManifestEntry& entry);

/// Streaming reader; blank lines are skipped.
class ManifestReader {
 public:
  explicit ManifestReader(const std::filesystem::path& path);
  bool next(ManifestEntry& entry);
  std::size_t line_no() const { return line_no_; }

 private:
  std::filesystem::path path_;
  std::ifstream in_;
  std::size_t line_no_ = 0;
};

std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path);
void save_manifest(std::span<const ManifestEntry> entries, const std::filesystem::path& path);

/// Audio path of an entry; relative paths resolve against the manifest's directory.
std::filesystem::path resolve_audio(const std::filesystem::path& manifest_path, const ManifestEntry& entry);

/// Utterance id: the `id` key when present, otherwise the audio file stem.
std::string utterance_id(const ManifestEntry& entry);

}  // namespace fama::text
