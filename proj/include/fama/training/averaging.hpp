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
#include <span>
#include <vector>

#include "fama/model/checkpoint.hpp"

namespace fama::train {

/// Elementwise mean of every tensor, accumulated in double and rounded to
/// f32 once. Configs, tensor names and shapes must agree; the result keeps
/// the first checkpoint's metadata with the largest step and stage "average".
model::Checkpoint average_checkpoints(std::span<const model::Checkpoint> ckpts);
model::Checkpoint average_checkpoints(std::span<const std::filesystem::path> paths);

/// The `k` checkpoint_<step>.ckpt files with the largest steps in `dir`,
/// ordered by step.
std::vector<std::filesystem::path> last_checkpoints(const std::filesystem::path& dir, std::size_t k);

}  // namespace fama::train
