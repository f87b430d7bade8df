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

#include <cstddef>
#include <functional>

#include "fama/numcore/tensor.hpp"

namespace fama::num {

struct GradCheckOptions {
  /// Largest number of elements probed; 0 probes every element. Probed
  /// elements are spread evenly across the tensor.
  std::size_t max_elements = 0;
  /// Elements whose analytic gradient is exactly zero pass when the
  /// numeric one is at most this large in magnitude.
  Real zero_tolerance = 0.0;
  /// Fourth-order stencil (f(x-2h) - 8f(x-h) + 8f(x+h) - f(x+2h)) / 12h
  /// instead of the central difference.
  bool five_point = false;
};

/// Compares the reverse-mode gradient of scalar `f` at `x` with finite
/// differences of step `eps`. Returns the max over probed elements of
/// |analytic - numeric| / max(|numeric|, 1e-8). `f` must be deterministic.
Real finite_difference_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& x, Real eps,
                             const GradCheckOptions& options = {});

}  // namespace fama::num
