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

#include "fama/training/averaging.hpp"

#include <algorithm>
#include <regex>

#include "fama/common.hpp"

namespace fama::train {

model::Checkpoint average_checkpoints(std::span<const model::Checkpoint> ckpts) {
  if (ckpts.empty()) throw ValueError("average: no checkpoints given");
  const model::Checkpoint& first = ckpts.front();
  for (std::size_t c = 1; c < ckpts.size(); ++c) {
    const auto& other = ckpts[c];
    if (!(other.config == first.config)) {
      throw ValueError("average: checkpoint " + std::to_string(c) + " has a different model config");
    }
    if (other.tensors.size() != first.tensors.size()) {
      throw ValueError("average: checkpoint " + std::to_string(c) + " holds " + std::to_string(other.tensors.size()) +
                       " tensors, expected " + std::to_string(first.tensors.size()));
    }
    for (std::size_t i = 0; i < first.tensors.size(); ++i) {
      const auto& a = first.tensors[i];
      const auto& b = other.tensors[i];
      if (a.name != b.name) {
        throw ValueError("average: tensor '" + b.name + "' in checkpoint " + std::to_string(c) + " where '" + a.name +
                         "' was expected");
      }
      if (a.shape != b.shape) {
        throw ValueError("average: tensor '" + a.name + "' has shape " + num::shape_str(b.shape) + " in checkpoint " +
                         std::to_string(c) + ", expected " + num::shape_str(a.shape));
      }
    }
  }
  model::Checkpoint out = first;
  out.stage = "average";
  out.extra["averaged"] = ckpts.size();
  const double k = static_cast<double>(ckpts.size());
  for (std::size_t i = 0; i < out.tensors.size(); ++i) {
    std::vector<double> acc(out.tensors[i].values.size(), 0.0);
    for (const auto& c : ckpts) {
      const auto& v = c.tensors[i].values;
      for (std::size_t e = 0; e < acc.size(); ++e) acc[e] += static_cast<double>(v[e]);
    }
    for (std::size_t e = 0; e < acc.size(); ++e) out.tensors[i].values[e] = static_cast<float>(acc[e] / k);
  }
  for (const auto& c : ckpts) out.step = std::max(out.step, c.step);
  return out;
}

model::Checkpoint average_checkpoints(std::span<const std::filesystem::path> paths) {
  std::vector<model::Checkpoint> ckpts;
  for (const auto& p : paths) ckpts.push_back(model::load_checkpoint(p));
  return average_checkpoints(ckpts);
}

std::vector<std::filesystem::path> last_checkpoints(const std::filesystem::path& dir, std::size_t k) {
  if (!std::filesystem::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  static const std::regex name(R"(checkpoint_(\d+)\.ckpt)");
  std::vector<std::pair<std::uint64_t, std::filesystem::path>> found;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    std::smatch m;
    const std::string fn = e.path().filename().string();
    if (std::regex_match(fn, m, name)) found.emplace_back(std::stoull(m[1].str()), e.path());
  }
  std::sort(found.begin(), found.end());
  const std::size_t start = found.size() > k ? found.size() - k : 0;
  std::vector<std::filesystem::path> out;
  for (std::size_t i = start; i < found.size(); ++i) out.push_back(found[i].second);
  return out;
}

}  // namespace fama::train
