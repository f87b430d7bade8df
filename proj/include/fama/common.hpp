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

#include <stdexcept>
#include <string>

namespace fama {

/// Base class of every error raised by the toolkit. The message is a single
/// line and is safe to print as a machine-parseable diagnostic.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class ValueError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

enum class Lang { kEn, kIt };

inline const char* lang_code(Lang lang) { return lang == Lang::kEn ? "en" : "it"; }

inline Lang parse_lang(const std::string& code) {
  if (code == "en") return Lang::kEn;
  if (code == "it") return Lang::kIt;
  throw ValueError("unknown language code '" + code + "' (expected en or it)");
}

enum class Task { kAsr, kSt };

inline const char* task_name(Task task) { return task == Task::kAsr ? "asr" : "st"; }

inline Task parse_task(const std::string& name) {
  if (name == "asr" || name == "ASR") return Task::kAsr;
  if (name == "st" || name == "ST") return Task::kSt;
  throw ValueError("unknown task '" + name + "' (expected asr or st)");
}

}  // namespace fama
