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

#include "fama/numcore/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "fama/numcore/autograd.hpp"

namespace fama::num {

namespace {

Real evaluate(const std::function<Tensor(const Tensor&)>& f, const Tensor& x) {
  NoGradGuard no_grad;
  const Tensor y = f(x);
  if (y.numel() != 1) throw ShapeError("finite_difference_check: f must return a scalar, got " + shape_str(y.shape()));
  const Real v = y.item();
  if (!std::isfinite(v)) throw ValueError("finite_difference_check: f(x) is not finite");
  return v;
}

}  // namespace

Real finite_difference_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& x, Real eps,
                             const GradCheckOptions& options) {
  if (!(eps > 0.0)) throw ValueError("finite_difference_check: eps must be positive");
  Tensor probe = x.clone();
  probe.set_requires_grad(true);
  probe.zero_grad();
  const Tensor y = f(probe);
  if (y.numel() != 1) throw ShapeError("finite_difference_check: f must return a scalar, got " + shape_str(y.shape()));
  if (!std::isfinite(y.item())) throw ValueError("finite_difference_check: f(x) is not finite");
  backward(y);
  std::vector<Real> analytic(probe.numel(), 0.0);
  if (!probe.grad().empty()) std::copy(probe.grad().begin(), probe.grad().end(), analytic.begin());

  const std::size_t n = probe.numel();
  const std::size_t count = options.max_elements == 0 ? n : std::min(n, options.max_elements);
  auto values = probe.data();
  Real worst = 0.0;
  for (std::size_t j = 0; j < count; ++j) {
    const std::size_t i = count == n ? j : (j * n) / count;
    const Real saved = values[i];
    auto at = [&](Real delta) {
      values[i] = saved + delta;
      return evaluate(f, probe);
    };
    Real numeric;
    if (options.five_point) {
      numeric = (at(-2 * eps) - 8 * at(-eps) + 8 * at(eps) - at(2 * eps)) / (12.0 * eps);
    } else {
      numeric = (at(eps) - at(-eps)) / (2.0 * eps);
    }
    values[i] = saved;
    // Exact zeros (unused rows, padding) agree when the difference quotient
    // is within rounding noise.
    if (analytic[i] == 0.0 && std::abs(numeric) <= options.zero_tolerance) continue;
    const Real err = std::abs(analytic[i] - numeric) / std::max(std::abs(numeric), 1e-8);
    worst = std::max(worst, err);
  }
  return worst;
}

}  // namespace fama::num
