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
#include <string>

#include "json.hpp"

namespace fama::model {

/// Architecture hyper-parameters. The encoder is twice as deep as the
/// decoder and the source-CTC tap sits at round(2 * enc_layers / 3).
struct ModelConfig {
  std::size_t enc_layers = 4;
  std::size_t dec_layers = 2;
  std::size_t d_model = 64;
  std::size_t heads = 4;
  std::size_t d_ffn = 256;
  std::size_t conv_kernel = 15;
  std::size_t vocab_size = 0;
  std::size_t tap_layer = 3;   // 1-based
  double dropout = 0.1;
  std::size_t n_mels = 80;
  std::uint64_t seed = 1;      // parameter initialisation

  static std::size_t tap_for(std::size_t enc_layers);

  static ModelConfig desk(std::size_t vocab_size);
  static ModelConfig small(std::size_t vocab_size);   // 12 / 6 layers, d 1024
  static ModelConfig medium(std::size_t vocab_size);  // 24 / 12 layers, d 1024
  static ModelConfig named(const std::string& name, std::size_t vocab_size);

  void validate() const;

  /// Number of scalar parameters a model of this shape holds.
  std::size_t parameter_count() const;

  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);

  bool operator==(const ModelConfig&) const = default;
};

inline constexpr std::size_t kSubsampleKernel = 5;
inline constexpr std::size_t kSubsampleStride = 2;

/// Frames left after the two stride-2 convolutions.
std::size_t subsampled_length(std::size_t frames);

}  // namespace fama::model
