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

#include "fama/textproc/manifest.hpp"

namespace fama::text {

namespace {

constexpr const char* kKnownKeys[] = {"audio", "duration_s", "src_lang", "transcript", "translation", "tgt_lang"};

std::string where(std::size_t line_no) { return "manifest line " + std::to_string(line_no) + ": "; }

}  // namespace

void validate_entry(const ManifestEntry& e) {
  if (!(e.duration_s > 0.0)) throw ValueError("duration_s must be positive");
  if (e.translation.has_value() != e.tgt_lang.has_value()) {
    throw ValueError("translation and tgt_lang must be given together");
  }
  if (e.tgt_lang && *e.tgt_lang == e.src_lang) throw ValueError("tgt_lang must differ from src_lang");
}

ManifestEntry parse_manifest_line(const std::string& line, std::size_t line_no) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& err) {
    throw ValueError(where(line_no) + "malformed record (" + err.what() + ")");
  }
  if (!j.is_object()) throw ValueError(where(line_no) + "record is not an object");
  auto require = [&](const char* key) -> const nlohmann::json& {
    auto it = j.find(key);
    if (it == j.end()) throw ValueError(where(line_no) + "missing required field '" + key + "'");
    return *it;
  };
  ManifestEntry e;
  try {
    e.audio = require("audio").get<std::string>();
    e.duration_s = require("duration_s").get<double>();
    e.src_lang = parse_lang(require("src_lang").get<std::string>());
    e.transcript = require("transcript").get<std::string>();
    if (auto it = j.find("translation"); it != j.end()) e.translation = it->get<std::string>();
    if (auto it = j.find("tgt_lang"); it != j.end()) e.tgt_lang = parse_lang(it->get<std::string>());
    validate_entry(e);
  } catch (const nlohmann::json::exception& err) {
    throw ValueError(where(line_no) + "bad field type (" + err.what() + ")");
  } catch (const ValueError& err) {
    const std::string msg = err.what();
    if (msg.rfind("manifest line", 0) == 0) throw;
    throw ValueError(where(line_no) + msg);
  }
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* k : kKnownKeys) known = known || it.key() == k;
    if (!known) e.extra[it.key()] = it.value();
  }
  return e;
}

std::string format_manifest_line(const ManifestEntry& e) {
  nlohmann::json j = e.extra.is_object() ? e.extra : nlohmann::json::object();
  j["audio"] = e.audio;
  j["duration_s"] = e.duration_s;
  j["src_lang"] = lang_code(e.src_lang);
  j["transcript"] = e.transcript;
  if (e.translation) j["translation"] = *e.translation;
  if (e.tgt_lang) j["tgt_lang"] = lang_code(*e.tgt_lang);
  return j.dump();
}

ManifestReader::ManifestReader(const std::filesystem::path& path) : path_(path), in_(path) {
  if (!in_) throw IoError("cannot open manifest '" + path.string() + "'");
}

bool ManifestReader::next(ManifestEntry& entry) {
  std::string line;
  while (std::getline(in_, line)) {
    ++line_no_;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    entry = parse_manifest_line(line, line_no_);
    return true;
  }
  return false;
}

std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path) {
  ManifestReader reader(path);
  std::vector<ManifestEntry> entries;
  ManifestEntry e;
  while (reader.next(e)) entries.push_back(std::move(e));
  return entries;
}

void save_manifest(std::span<const ManifestEntry> entries, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write manifest '" + path.string() + "'");
  for (const auto& e : entries) out << format_manifest_line(e) << '\n';
}

std::filesystem::path resolve_audio(const std::filesystem::path& manifest_path, const ManifestEntry& entry) {
  std::filesystem::path p(entry.audio);
  if (p.is_absolute()) return p;
  return manifest_path.parent_path() / p;
}

std::string utterance_id(const ManifestEntry& entry) {
  if (auto it = entry.extra.find("id"); it != entry.extra.end() && it->is_string()) return it->get<std::string>();
  return std::filesystem::path(entry.audio).stem().string();
}

}  // namespace fama::text
