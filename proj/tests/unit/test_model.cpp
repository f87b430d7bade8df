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

#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "fama/losses/combined.hpp"
#include "fama/model/checkpoint.hpp"
#include "fama/model/config.hpp"
#include "fama/model/fama_model.hpp"
#include "fama/numcore/autograd.hpp"
#include "fama/numcore/gradcheck.hpp"
#include "fama/numcore/ops.hpp"
#include "test_util.hpp"

using namespace fama;
using namespace fama::model;
using num::Tensor;

namespace {

ModelConfig tiny_config(std::size_t vocab = 12) {
  ModelConfig c;
  c.enc_layers = 2;
  c.dec_layers = 1;
  c.tap_layer = 1;
  c.d_model = 8;
  c.heads = 2;
  c.d_ffn = 16;
  c.conv_kernel = 3;
  c.vocab_size = vocab;
  c.dropout = 0.0;
  c.seed = 3;
  return c;
}

ModelConfig desk_eval(std::size_t vocab = 20) {
  auto c = ModelConfig::desk(vocab);
  c.dropout = 0.0;
  return c;
}

// Rows of `x` [B, T, D] for utterance b, first n frames.
std::vector<double> rows(const Tensor& x, std::size_t b, std::size_t n) {
  const std::size_t T = x.dim(1), D = x.dim(2);
  auto d = x.data();
  return {d.begin() + static_cast<std::ptrdiff_t>(b * T * D), d.begin() + static_cast<std::ptrdiff_t>((b * T + n) * D)};
}

Tensor pack(const std::vector<Tensor>& feats, std::vector<std::size_t>& lengths) {
  std::size_t T = 0;
  for (const auto& f : feats) T = std::max(T, f.dim(1));
  const std::size_t D = feats[0].dim(2);
  Tensor out = Tensor::full({feats.size(), T, D}, 7.5);  // garbage in the padding on purpose
  lengths.clear();
  for (std::size_t b = 0; b < feats.size(); ++b) {
    const auto src = feats[b].data();
    std::copy(src.begin(), src.end(), out.data().begin() + static_cast<std::ptrdiff_t>(b * T * D));
    lengths.push_back(feats[b].dim(1));
  }
  return out;
}

}  // namespace

TEST_CASE("config rules") {
  CHECK(ModelConfig::tap_for(12) == 8);
  CHECK(ModelConfig::tap_for(24) == 16);
  CHECK(ModelConfig::tap_for(4) == 3);
  CHECK(ModelConfig::small(16000).tap_layer == 8);
  CHECK(ModelConfig::medium(16000).tap_layer == 16);

  const double small = static_cast<double>(ModelConfig::small(16000).parameter_count());
  CHECK(std::abs(small / 475e6 - 1.0) <= 0.03);

  for (const auto& c : {desk_eval(), tiny_config()}) {
    CHECK(c.parameter_count() == FamaModel(c).parameter_count());
  }
  auto bad = ModelConfig::desk(20);
  bad.dec_layers = 3;
  CHECK_THROWS_WITH_AS(bad.validate(), doctest::Contains("twice"), ValueError);
  bad = ModelConfig::desk(20);
  bad.tap_layer = 2;
  CHECK_THROWS_AS(bad.validate(), ValueError);
  bad = ModelConfig::desk(20);
  bad.heads = 5;
  CHECK_THROWS_AS(bad.validate(), ValueError);
  CHECK(ModelConfig::from_json(ModelConfig::small(99).to_json()) == ModelConfig::small(99));
  auto j = ModelConfig::desk(20).to_json();
  j["bogus"] = 1;
  CHECK_THROWS_AS(ModelConfig::from_json(j), ValueError);
}

TEST_CASE("subsampling lengths") {
  CHECK(subsampled_length(100) == 25);
  CHECK(subsampled_length(16) == 4);
  FamaModel m(desk_eval());
  num::Rng rng(1);
  num::NoGradGuard ng;
  std::vector<std::size_t> out;
  Tensor y = m.subsample(testing::random_tensor({1, 100, 80}, rng), std::vector<std::size_t>{100}, &out);
  CHECK(y.shape() == num::Shape{1, 25, 64});
  CHECK_THROWS_WITH_AS(m.subsample(testing::random_tensor({1, 4, 80}, rng), std::vector<std::size_t>{4}),
                       doctest::Contains("kernel"), ShapeError);

  std::vector<std::size_t> lens;
  Tensor batch = pack({testing::random_tensor({1, 100, 80}, rng), testing::random_tensor({1, 16, 80}, rng)}, lens);
  y = m.subsample(batch, lens, &out);
  CHECK(out == std::vector<std::size_t>{25, 4});
  for (std::size_t t = 4; t < 25; ++t) {
    for (std::size_t k = 0; k < 64; ++k) CHECK(y.data()[(25 + t) * 64 + k] == 0.0);
  }
  CHECK_THROWS_AS(m.encode(batch, std::vector<std::size_t>{101, 16}), ShapeError);
}

TEST_CASE("encoder determinism and padding invariance") {
  FamaModel m(desk_eval());
  num::Rng rng(2);
  num::NoGradGuard ng;
  std::vector<Tensor> utts;
  for (std::size_t n : {37, 100, 16, 64, 5, 90, 23, 71}) utts.push_back(testing::random_tensor({1, n, 80}, rng));

  const auto a = m.encode(utts[0], std::vector<std::size_t>{37});
  const auto b = m.encode(utts[0], std::vector<std::size_t>{37});
  CHECK(a.states.data().size() == b.states.data().size());
  CHECK(std::equal(a.states.data().begin(), a.states.data().end(), b.states.data().begin()));

  for (std::size_t batch_size : {2u, 5u, 8u}) {
    std::vector<Tensor> group(utts.begin(), utts.begin() + static_cast<std::ptrdiff_t>(batch_size));
    std::vector<std::size_t> lens;
    Tensor x = pack(group, lens);
    const auto enc = m.encode(x, lens);
    std::vector<TokenId> prefix{3, 5, 9, 10, 11, 12};
    std::vector<TokenId> tokens;
    for (std::size_t i = 0; i < batch_size; ++i) tokens.insert(tokens.end(), prefix.begin(), prefix.end());
    const Tensor dec = m.decode(m.memory(enc), tokens, prefix.size());
    for (std::size_t i = 0; i < batch_size; ++i) {
      const auto alone = m.encode(group[i], std::vector<std::size_t>{lens[i]});
      const std::size_t n = alone.lengths[0];
      CHECK(enc.lengths[i] == n);
      CHECK(testing::max_abs_diff(rows(enc.states, i, n), rows(alone.states, 0, n)) <= 1e-5);
      CHECK(testing::max_abs_diff(rows(enc.tap_states, i, n), rows(alone.tap_states, 0, n)) <= 1e-5);
      const Tensor dec1 = m.decode(m.memory(alone), prefix, prefix.size());
      CHECK(testing::max_abs_diff(rows(dec, i, prefix.size()), dec1.data()) <= 1e-5);
      // Padded frames stay zero.
      for (double v : std::vector<double>(enc.states.data().begin() + static_cast<std::ptrdiff_t>((i * enc.frames() + n) * 64),
                                          enc.states.data().begin() + static_cast<std::ptrdiff_t>((i + 1) * enc.frames() * 64))) {
        CHECK(v == 0.0);
      }
    }
  }
}

TEST_CASE("decoder step") {
  FamaModel m(desk_eval());
  num::Rng rng(3);
  num::NoGradGuard ng;
  const auto enc = m.encode(testing::random_tensor({1, 60, 80}, rng), std::vector<std::size_t>{60});
  std::vector<TokenId> prefix{3, 5, 8};
  const Tensor lp = m.decode_step(enc, prefix);
  double s = 0.0;
  for (double v : lp.data()) s += std::exp(v);
  CHECK(s == doctest::Approx(1.0).epsilon(1e-6));

  const Tensor full = m.decode(m.memory(enc), prefix, 3);
  std::vector<TokenId> longer = prefix;
  longer.push_back(9);
  const Tensor full2 = m.decode(m.memory(enc), longer, 4);
  CHECK(testing::max_abs_diff(full.data(), full2.data().first(full.numel())) <= 1e-6);
  CHECK_THROWS_AS(m.decode_step(enc, std::vector<TokenId>{}), ValueError);

  for (auto& [name, t] : m.params().entries()) {
    if (name == "decoder.out.weight") std::fill(t.data().begin(), t.data().end(), 0.0);
  }
  const Tensor uniform = m.decode_step(enc, prefix);
  for (double v : uniform.data()) CHECK(v == doctest::Approx(-std::log(20.0)).epsilon(1e-12));
}

TEST_CASE("ctc heads") {
  FamaModel m(desk_eval());
  num::Rng rng(4);
  num::NoGradGuard ng;
  const auto enc = m.encode(testing::random_tensor({1, 40, 80}, rng), std::vector<std::size_t>{40});
  const Tensor a = m.ctc_head(enc.states, "src");
  const Tensor b = m.ctc_head(enc.states, "tgt");
  CHECK(a.shape() == num::Shape{1, 10, 20});
  for (std::size_t t = 0; t < 10; ++t) {
    double s = 0.0;
    for (std::size_t v = 0; v < 20; ++v) s += std::exp(a.data()[t * 20 + v]);
    CHECK(s == doctest::Approx(1.0).epsilon(1e-6));
  }
  CHECK(testing::max_abs_diff(a.data(), b.data()) > 1e-3);
  CHECK_THROWS_WITH_AS(m.ctc_head(enc.states, "mid"), doctest::Contains("unknown head"), ValueError);
}

TEST_CASE("end-to-end gradient of a miniature model") {
  auto cfg = tiny_config();
  FamaModel m(cfg);
  m.set_training(true);  // dropout rate is 0, so training mode changes nothing
  auto vocab = text::Vocabulary::build(std::vector<std::string>{"abcde"});
  REQUIRE(vocab.size() == 12);
  text::ManifestEntry e1{"a.wav", 1.0, Lang::kEn, "abc", std::string("de"), Lang::kIt, {}};
  text::ManifestEntry e2{"b.wav", 1.0, Lang::kEn, "ed", std::string("a"), Lang::kIt, {}};
  const text::ManifestEntry* batch[] = {&e1, &e2};
  const Task tasks[] = {Task::kAsr, Task::kSt};
  const auto targets = loss::make_loss_targets(batch, tasks, vocab);
  num::Rng rng(5);
  Tensor feats = testing::random_tensor({2, 24, 80}, rng);
  const std::vector<std::size_t> lens{24, 19};
  auto loss_of = [&](const Tensor& f) {
    auto out = m.forward(f, lens, targets.decoder_inputs, targets.dec_len);
    return loss::combined_loss({out.decoder_logprobs, out.ctc_src_logprobs, out.ctc_tgt_logprobs, out.enc.lengths},
                               targets, loss::LossWeights{})
        .total;
  };
  CHECK(num::finite_difference_check(loss_of, feats, 1e-6, {40}) <= 1e-5);

  // Parameters: analytic gradient vs central differences on sampled entries.
  m.zero_grad();
  Tensor total = loss_of(feats);
  num::backward(total);
  double worst = 0.0;
  std::size_t probed = 0;
  for (auto& [name, p] : m.params().entries()) {
    const auto g = std::vector<double>(p.grad().begin(), p.grad().end());
    REQUIRE(g.size() == p.numel());
    if (name.ends_with(".k.bias")) {
      // Softmax is shift invariant, so key biases get an exactly zero
      // gradient; central differences there only measure rounding noise.
      for (double v : g) CHECK(std::abs(v) < 1e-12);
      continue;
    }
    for (std::size_t i = 0; i < p.numel(); i += std::max<std::size_t>(1, p.numel() / 3)) {
      num::NoGradGuard ng;
      const double keep = p.data()[i];
      const double eps = 1e-6;
      p.data()[i] = keep + eps;
      const double up = loss_of(feats).item();
      p.data()[i] = keep - eps;
      const double down = loss_of(feats).item();
      p.data()[i] = keep;
      const double numeric = (up - down) / (2 * eps);
      const double err = std::abs(g[i] - numeric) / std::max(std::abs(numeric), 1e-8);
      if (err > 1e-5) MESSAGE(name << "[" << i << "] analytic " << g[i] << " numeric " << numeric);
      worst = std::max(worst, err);
      ++probed;
    }
  }
  CHECK(probed > 100);
  CHECK(worst <= 1e-5);
}

TEST_CASE("checkpoint round trip") {
  const auto dir = std::filesystem::temp_directory_path() / "fama_model_ckpt";
  std::filesystem::remove_all(dir);
  auto vocab = text::Vocabulary::build(std::vector<std::string>{"abcdefghijklm"});
  FamaModel m(desk_eval(vocab.size()));
  const auto c = make_checkpoint(m, vocab, 1234, "asr");
  save_checkpoint(c, dir / "a.ckpt");
  const auto back = load_checkpoint(dir / "a.ckpt");
  CHECK(back == c);
  save_checkpoint(back, dir / "b.ckpt");
  auto slurp = [](const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string{std::istreambuf_iterator<char>(in), {}};
  };
  CHECK(slurp(dir / "a.ckpt") == slurp(dir / "b.ckpt"));
  CHECK(slurp(dir / "a.ckpt").substr(0, 4) == "FAMA");

  FamaModel restored = model_from_checkpoint(back);
  CHECK(vocabulary_from_checkpoint(back) == vocab);
  for (std::size_t i = 0; i < m.params().entries().size(); ++i) {
    const auto& a = m.params().entries()[i].second;
    const auto& b = restored.params().entries()[i].second;
    for (std::size_t k = 0; k < a.numel(); ++k) CHECK(b.data()[k] == static_cast<double>(static_cast<float>(a.data()[k])));
  }
  auto broken = c;
  broken.tensors[3].shape = {1, broken.tensors[3].values.size()};
  CHECK_THROWS_WITH_AS(load_parameters(restored, broken), doctest::Contains(c.tensors[3].name.c_str()), ValueError);
  {
    std::ofstream f(dir / "bad.ckpt", std::ios::binary);
    f << "NOPE";
  }
  CHECK_THROWS_WITH_AS(load_checkpoint(dir / "bad.ckpt"), doctest::Contains("magic"), IoError);
  CHECK_THROWS_AS(load_checkpoint(dir / "missing.ckpt"), IoError);
}
