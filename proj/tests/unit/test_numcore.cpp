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

#include "doctest.h"
#include "fama/numcore/autograd.hpp"
#include "fama/numcore/gradcheck.hpp"
#include "fama/numcore/ops.hpp"
#include "test_util.hpp"

using namespace fama::num;
using fama::testing::random_tensor;

TEST_CASE("matmul shape rule") {
  Rng rng(1);
  Tensor a = random_tensor({2, 3}, rng);
  Tensor b = random_tensor({3, 4}, rng);
  CHECK(matmul(a, b).shape() == Shape{2, 4});
  CHECK_THROWS_AS(matmul(a, random_tensor({4, 4}, rng)), fama::ShapeError);
}

TEST_CASE("shape errors name the op and both shapes") {
  Rng rng(2);
  try {
    add(random_tensor({2, 3}, rng), random_tensor({3, 2}, rng));
    FAIL("expected ShapeError");
  } catch (const fama::ShapeError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("add") != std::string::npos);
    CHECK(msg.find("[2x3]") != std::string::npos);
    CHECK(msg.find("[3x2]") != std::string::npos);
  }
}

TEST_CASE("conv1d length rule") {
  CHECK(conv_out_length(100, 5, 2) == 50);
  CHECK(conv_out_length(50, 5, 2) == 25);
  CHECK(conv_out_length(16, 5, 2) == 8);
  Rng rng(3);
  Tensor x = random_tensor({1, 100, 3}, rng);
  Tensor w = random_tensor({5, 3, 2}, rng);
  CHECK(conv1d(x, w, Tensor(), 2).shape() == Shape{1, 50, 2});
  CHECK_THROWS(conv1d(x, w, Tensor(), 0));
}

TEST_CASE("conv1d matches a direct loop") {
  Rng rng(4);
  Tensor x = random_tensor({2, 9, 3}, rng);
  Tensor w = random_tensor({5, 3, 4}, rng);
  Tensor b = random_tensor({4}, rng);
  Tensor y = conv1d(x, w, b, 2);
  const std::size_t out_len = y.dim(1);
  double worst = 0.0;
  for (std::size_t bb = 0; bb < 2; ++bb) {
    for (std::size_t t = 0; t < out_len; ++t) {
      for (std::size_t o = 0; o < 4; ++o) {
        double acc = b.at(o);
        for (std::size_t k = 0; k < 5; ++k) {
          const long src = static_cast<long>(t * 2 + k) - 2;
          if (src < 0 || src >= 9) continue;
          for (std::size_t c = 0; c < 3; ++c) acc += x.at((bb * 9 + src) * 3 + c) * w.at((k * 3 + c) * 4 + o);
        }
        worst = std::max(worst, std::abs(acc - y.at((bb * out_len + t) * 4 + o)));
      }
    }
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("softmax rows sum to one") {
  Rng rng(5);
  Tensor y = softmax(random_tensor({7, 11}, rng, 3.0));
  for (std::size_t r = 0; r < 7; ++r) {
    double s = 0.0;
    for (std::size_t i = 0; i < 11; ++i) s += y.at(r * 11 + i);
    CHECK(std::abs(s - 1.0) < 1e-6);
  }
}

TEST_CASE("backward of sum is all ones") {
  Tensor x = Tensor::from({3}, {0.5, -2.0, 7.0}, true);
  backward(sum(x));
  for (double g : x.grad()) CHECK(g == 1.0);
}

TEST_CASE("backward of sum of squares") {
  Tensor x = Tensor::from({2}, {1.0, 2.0}, true);
  backward(sum(mul(x, x)));
  CHECK(x.grad()[0] == doctest::Approx(2.0));
  CHECK(x.grad()[1] == doctest::Approx(4.0));
}

TEST_CASE("second backward without re-forward is rejected") {
  Tensor x = Tensor::from({2}, {1.0, 2.0}, true);
  Tensor y = sum(mul(x, x));
  backward(y);
  CHECK_THROWS_AS(backward(y), fama::ValueError);
}

TEST_CASE("backward on an empty graph is a no-op") {
  Tensor x = Tensor::from({2}, {1.0, 2.0});
  Tensor y = sum(x);
  CHECK(Graph::from(y).empty());
  CHECK_NOTHROW(backward(y));
}

TEST_CASE("non-participating leaves receive no gradient") {
  Tensor x = Tensor::from({2}, {1.0, 2.0}, true);
  Tensor unused = Tensor::from({2}, {3.0, 4.0}, true);
  backward(sum(x));
  CHECK(unused.grad().empty());
}

TEST_CASE("detached tensors never receive gradient") {
  Tensor x = Tensor::from({2}, {1.0, 2.0}, true);
  Tensor d = x.detach();
  CHECK_FALSE(d.requires_grad());
  Tensor y = sum(add(mul(x, x), d));
  backward(y);
  CHECK(d.grad().empty());
}

TEST_CASE("strict mode rejects non-finite input") {
  Tensor x = Tensor::from({2}, {1.0, std::nan("")});
  CHECK_NOTHROW(scale(x, 2.0));
  StrictModeGuard strict;
  CHECK_THROWS_AS(scale(x, 2.0), fama::ValueError);
}

TEST_CASE("finite difference check of sum is exact") {
  // Integer-valued inputs and a power-of-two step keep every perturbed sum
  // exactly representable.
  Tensor x = Tensor::from({4, 3}, {1, -2, 3, 4, -5, 6, 7, 8, -9, 10, 11, 12});
  CHECK(finite_difference_check([](const Tensor& t) { return sum(t); }, x, 0x1p-20) == 0.0);
  Rng rng(6);
  CHECK(finite_difference_check([](const Tensor& t) { return sum(t); }, random_tensor({4, 3}, rng), 1e-6) < 1e-8);
}

TEST_CASE("finite difference check of log-softmax pick") {
  Rng rng(7);
  Tensor x = random_tensor({1, 5}, rng);
  const double err =
      finite_difference_check([](const Tensor& t) { return select(log_softmax(t), 2); }, x, 1e-6);
  CHECK(err <= 1e-6);
  // A wide step: second-order truncation shows, fourth-order does not.
  auto f = [](const Tensor& t) { return select(log_softmax(mul(t, t)), 2); };
  const double central = finite_difference_check(f, x, 1e-2);
  GradCheckOptions five;
  five.five_point = true;
  const double fourth = finite_difference_check(f, x, 1e-2, five);
  CHECK(central > 1e-6);
  CHECK(fourth < central / 100);
}

TEST_CASE("finite difference check: exact zeros within tolerance") {
  // Entries 1.. never reach the loss; their analytic gradient is zero and so
  // is the difference quotient, with or without a tolerance.
  Rng rng(8);
  Tensor x = random_tensor({6}, rng);
  auto f = [](const Tensor& t) { return mul(select(t, 0), select(t, 0)); };
  CHECK(finite_difference_check(f, x, 1e-6) < 1e-8);
  GradCheckOptions tol;
  tol.zero_tolerance = 1e-9;
  CHECK(finite_difference_check(f, x, 1e-6, tol) < 1e-8);
}

namespace {

Tensor weighted_probe(const Tensor& y, std::uint64_t seed) {
  Rng rng(seed);
  Tensor w = random_tensor(y.shape(), rng);
  return sum(mul(y, w));
}

}  // namespace

TEST_CASE("every differentiable op matches central differences") {
  Rng rng(8);
  const double eps = 1e-6, tol = 1e-5;
  Tensor w = random_tensor({5, 3, 4}, rng, 0.5);
  Tensor cb = random_tensor({4}, rng);
  Tensor dw = random_tensor({3, 4}, rng, 0.5);
  Tensor db = random_tensor({4}, rng);
  Tensor gamma = random_tensor({4}, rng);
  Tensor beta = random_tensor({4}, rng);
  Tensor other = random_tensor({2, 6, 4}, rng);
  Tensor mw = random_tensor({3, 4}, rng);
  Tensor cx = random_tensor({2, 6, 3}, rng);
  std::vector<std::int32_t> ids{0, 3, 3, 4, 1, 0};
  std::vector<std::size_t> lens{6, 4};

  struct Case {
    const char* name;
    Shape shape;
    std::function<Tensor(const Tensor&)> f;
  };
  std::vector<Case> cases = {
      {"matmul", {2, 6, 3}, [&](const Tensor& x) { return weighted_probe(matmul(x, mw), 1); }},
      {"matmul-weight", {3, 4}, [&](const Tensor& x) { return weighted_probe(matmul(cx, x), 14); }},
      {"conv1d", {2, 6, 3}, [&](const Tensor& x) { return weighted_probe(conv1d(x, w, cb, 2), 2); }},
      {"conv1d-weight", {5, 3, 4}, [&](const Tensor& x) { return weighted_probe(conv1d(cx, x, cb, 2), 3); }},
      {"embedding", {5, 4}, [&](const Tensor& x) { return weighted_probe(embedding(ids, {2, 3}, x), 15); }},
      {"depthwise", {2, 6, 4}, [&](const Tensor& x) { return weighted_probe(depthwise_conv1d(x, dw, db), 4); }},
      {"layer_norm", {2, 6, 4}, [&](const Tensor& x) { return weighted_probe(layer_norm(x, gamma, beta), 5); }},
      {"softmax", {3, 5}, [&](const Tensor& x) { return weighted_probe(softmax(x), 6); }},
      {"log_softmax", {3, 5}, [&](const Tensor& x) { return weighted_probe(log_softmax(x), 7); }},
      {"silu", {3, 5}, [&](const Tensor& x) { return weighted_probe(silu(x), 8); }},
      {"glu", {3, 6}, [&](const Tensor& x) { return weighted_probe(glu(x), 9); }},
      {"add_broadcast", {2, 6, 4}, [&](const Tensor& x) { return weighted_probe(add_broadcast(mul(x, x), db), 10); }},
      {"attention", {2, 6, 4}, [&](const Tensor& x) { return weighted_probe(attention(x, x, x, 2, lens, false), 11); }},
      {"attention-causal", {2, 6, 4}, [&](const Tensor& x) { return weighted_probe(attention(x, other, other, 2, {}, true), 12); }},
      {"mask_time", {2, 6, 4}, [&](const Tensor& x) { return weighted_probe(mask_time(mul(x, x), lens), 13); }},
      {"mean", {3, 5}, [&](const Tensor& x) { return mean(mul(x, x)); }},
  };
  for (const Case& c : cases) {
    CAPTURE(c.name);
    Rng local(42);
    const double err = finite_difference_check(c.f, random_tensor(c.shape, local), eps);
    CHECK(err <= tol);
  }
}
