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

#include "fama/model/config.hpp"

#include <cmath>

#include "fama/common.hpp"
#include "fama/numcore/ops.hpp"

namespace fama::model {

std::size_t ModelConfig::tap_for(std::size_t enc_layers) {
  return static_cast<std::size_t>(std::lround(2.0 * static_cast<double>(enc_layers) / 3.0));
}

ModelConfig ModelConfig::desk(std::size_t vocab_size) {
  ModelConfig c;
  c.vocab_size = vocab_size;
  return c;
}

ModelConfig ModelConfig::small(std::size_t vocab_size) {
  ModelConfig c;
  c.enc_layers = 12;
  c.dec_layers = 6;
  c.d_model = 1024;
  c.heads = 16;
  c.d_ffn = 4096;
  c.conv_kernel = 31;
  c.vocab_size = vocab_size;
  c.tap_layer = tap_for(12);
  return c;
}

ModelConfig ModelConfig::medium(std::size_t vocab_size) {
  ModelConfig c = small(vocab_size);
  c.enc_layers = 24;
  c.dec_layers = 12;
  c.tap_layer = tap_for(24);
  return c;
}

ModelConfig ModelConfig::named(const std::string& name, std::size_t vocab_size) {
  if (name == "desk") return desk(vocab_size);
  if (name == "small") return small(vocab_size);
  if (name == "medium") return medium(vocab_size);
  throw ValueError("unknown model config '" + name + "' (expected desk, small or medium)");
}

void ModelConfig::validate() const {
  auto fail = [](const std::string& m) { throw ValueError("model config: " + m); };
  if (enc_layers == 0 || dec_layers == 0) fail("layer counts must be positive");
  if (enc_layers != 2 * dec_layers) {
    fail("encoder must have twice the decoder layers (got " + std::to_string(enc_layers) + " and " +
         std::to_string(dec_layers) + ")");
  }
  if (tap_layer != tap_for(enc_layers)) {
    fail("tap_layer must be round(2*enc_layers/3) = " + std::to_string(tap_for(enc_layers)) + ", got " +
         std::to_string(tap_layer));
  }
  if (heads == 0 || d_model % heads != 0) fail("d_model must be divisible by heads");
  if (d_model % 2 != 0) fail("d_model must be even");
  if (d_ffn == 0 || conv_kernel == 0) fail("d_ffn and conv_kernel must be positive");
  if (conv_kernel % 2 == 0) fail("conv_kernel must be odd");
  if (vocab_size <= 7) fail("vocab_size must exceed the 7 special tokens");
  if (!(dropout >= 0.0 && dropout < 1.0)) fail("dropout must lie in [0, 1)");
  if (n_mels == 0) fail("n_mels must be positive");
}

std::size_t ModelConfig::parameter_count() const {
  const std::size_t d = d_model, f = d_ffn, V = vocab_size, K = conv_kernel;
  const std::size_t ln = 2 * d;
  const std::size_t lin_dd = d * d + d;
  const std::size_t ffn = ln + (d * f + f) + (f * d + d);
  const std::size_t mha = 4 * lin_dd;
  const std::size_t conv = ln + (d * 2 * d + 2 * d) + (K * d + d) + ln + lin_dd;
  const std::size_t enc_block = 2 * ffn + ln + mha + conv + ln;
  const std::size_t subsample = (kSubsampleKernel * n_mels * 2 * d + 2 * d) +
                                (kSubsampleKernel * d * 2 * d + 2 * d) + lin_dd;
  const std::size_t dec_block = (ln + mha) + (ln + mha) + ln + (d * f + f) + (f * d + d);
  const std::size_t decoder = V * d + dec_layers * dec_block + ln + d * V;
  const std::size_t ctc = 2 * (d * V + V);
  return subsample + enc_layers * enc_block + decoder + ctc;
}

nlohmann::json ModelConfig::to_json() const {
  return {{"enc_layers", enc_layers}, {"dec_layers", dec_layers}, {"d_model", d_model},
          {"heads", heads},           {"d_ffn", d_ffn},           {"conv_kernel", conv_kernel},
          {"vocab_size", vocab_size}, {"tap_layer", tap_layer},   {"dropout", dropout},
          {"n_mels", n_mels},         {"seed", seed}};
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
  ModelConfig c;
  for (const auto& [key, value] : j.items()) {
    if (key == "enc_layers") c.enc_layers = value.get<std::size_t>();
    else if (key == "dec_layers") c.dec_layers = value.get<std::size_t>();
    else if (key == "d_model") c.d_model = value.get<std::size_t>();
    else if (key == "heads") c.heads = value.get<std::size_t>();
    else if (key == "d_ffn") c.d_ffn = value.get<std::size_t>();
    else if (key == "conv_kernel") c.conv_kernel = value.get<std::size_t>();
    else if (key == "vocab_size") c.vocab_size = value.get<std::size_t>();
    else if (key == "tap_layer") c.tap_layer = value.get<std::size_t>();
    else if (key == "dropout") c.dropout = value.get<double>();
    else if (key == "n_mels") c.n_mels = value.get<std::size_t>();
    else if (key == "seed") c.seed = value.get<std::uint64_t>();
    else throw ValueError("model config: unknown key '" + key + "'");
  }
  c.validate();
  return c;
}

std::size_t subsampled_length(std::size_t frames) {
  return num::conv_out_length(num::conv_out_length(frames, kSubsampleKernel, kSubsampleStride), kSubsampleKernel,
                              kSubsampleStride);
}

}  // namespace fama::model
