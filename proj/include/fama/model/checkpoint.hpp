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
#include <filesystem>
#include <string>
#include <vector>

#include "fama/model/config.hpp"
#include "fama/model/fama_model.hpp"
#include "fama/numcore/tensor.hpp"
#include "json.hpp"

namespace fama::model {

struct NamedTensor {
  std::string name;
  num::Shape shape;
  std::vector<float> values;
  bool operator==(const NamedTensor&) const = default;
};

/// On disk: "FAMA", u32 version, u64 metadata length, metadata JSON, u64
/// record count, then per record: u32 name length, name, u8 dtype (1 = f32),
/// u32 rank, u64 extents, little-endian f32 values.
struct Checkpoint {
  static constexpr std::uint32_t kVersion = 1;

  ModelConfig config;
  std::uint64_t step = 0;
  std::string stage;               // "asr", "asr+st", "init", "average", ...
  std::vector<std::string> vocab;  // full token list, specials first
  nlohmann::json extra = nlohmann::json::object();
  std::vector<NamedTensor> tensors;

  const NamedTensor* find(const std::string& name) const;
  bool operator==(const Checkpoint&) const = default;
};

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Parameters rounded to f32.
Checkpoint make_checkpoint(const FamaModel& model, const text::Vocabulary& vocab, std::uint64_t step,
                           const std::string& stage);

/// Copies tensors into a model of the same config; names and shapes must match.
void load_parameters(FamaModel& model, const Checkpoint& ckpt);

/// Model with the checkpoint's config and parameters.
FamaModel model_from_checkpoint(const Checkpoint& ckpt);

text::Vocabulary vocabulary_from_checkpoint(const Checkpoint& ckpt);

}  // namespace fama::model
