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

#include "fama/numcore/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>

#include "fama/numcore/autograd.hpp"

namespace fama::num {

namespace {

using RowMat = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using CMapMat = Eigen::Map<const RowMat>;
using SMapMat = Eigen::Map<RowMat, 0, Eigen::OuterStride<>>;
using CSMapMat = Eigen::Map<const RowMat, 0, Eigen::OuterStride<>>;
using Storage = std::shared_ptr<std::vector<Real>>;
using Arr = Eigen::Array<Real, Eigen::Dynamic, 1>;
using MapArr = Eigen::Map<Arr>;
using CMapArr = Eigen::Map<const Arr>;

// Vectorised logistic function. Runs on an aligned scratch copy: Eigen
// peels unaligned heads onto the scalar exp, which would make results depend
// on where the caller's buffer happens to start.
void sigmoid_into(const Real* x, Real* out, std::size_t n) {
  thread_local Arr scratch;
  const auto len = static_cast<Eigen::Index>(n);
  if (scratch.size() < len) scratch.resize(len);
  auto head = scratch.head(len);
  head = CMapArr(x, len);
  head = 1.0 / (1.0 + (-head).exp());
  std::copy_n(head.data(), n, out);
}

constexpr Real kNegInf = -std::numeric_limits<Real>::infinity();

[[noreturn]] void shape_fail(const char* op, const std::string& what, const Shape& a, const Shape& b) {
  throw ShapeError(std::string(op) + ": " + what + " (" + shape_str(a) + " vs " + shape_str(b) + ")");
}

[[noreturn]] void shape_fail(const char* op, const std::string& what, const Shape& a) {
  throw ShapeError(std::string(op) + ": " + what + " (" + shape_str(a) + ")");
}

Storage storage(const Tensor& t) { return t.impl()->data; }

std::size_t trailing(const Tensor& t) { return t.rank() == 0 ? 1 : t.shape().back(); }

void require_defined(const char* op, const Tensor& t) {
  if (!t.defined()) throw ValueError(std::string(op) + ": undefined input tensor");
}

}  // namespace

Tensor reshape(const Tensor& x, Shape shape) {
  require_defined("reshape", x);
  if (shape_numel(shape) != x.numel()) shape_fail("reshape", "element count differs", x.shape(), shape);
  auto impl = std::make_shared<detail::TensorImpl>();
  impl->shape = std::move(shape);
  impl->data = x.impl()->data;
  Tensor out(std::move(impl));
  if (detail::needs_grad({&x})) {
    detail::record(out, "reshape", {&x}, [](std::span<const Real> g, detail::GradSink& sink) {
      auto gx = sink[0];
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
    });
  }
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) shape_fail("add", "shapes differ", a.shape(), b.shape());
  detail::check_finite("add", {&a, &b});
  Tensor out = Tensor::zeros(a.shape());
  auto o = out.data();
  auto x = a.data();
  auto y = b.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = x[i] + y[i];
  if (detail::needs_grad({&a, &b})) {
    detail::record(out, "add", {&a, &b}, [](std::span<const Real> g, detail::GradSink& sink) {
      for (std::size_t in = 0; in < 2; ++in) {
        if (!sink.wants(in)) continue;
        auto gx = sink[in];
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
      }
    });
  }
  return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) shape_fail("sub", "shapes differ", a.shape(), b.shape());
  detail::check_finite("sub", {&a, &b});
  Tensor out = Tensor::zeros(a.shape());
  auto o = out.data();
  auto x = a.data();
  auto y = b.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = x[i] - y[i];
  if (detail::needs_grad({&a, &b})) {
    detail::record(out, "sub", {&a, &b}, [](std::span<const Real> g, detail::GradSink& sink) {
      if (sink.wants(0)) {
        auto gx = sink[0];
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
      }
      if (sink.wants(1)) {
        auto gy = sink[1];
        for (std::size_t i = 0; i < g.size(); ++i) gy[i] -= g[i];
      }
    });
  }
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) shape_fail("mul", "shapes differ", a.shape(), b.shape());
  detail::check_finite("mul", {&a, &b});
  Tensor out = Tensor::zeros(a.shape());
  auto o = out.data();
  auto x = a.data();
  auto y = b.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = x[i] * y[i];
  if (detail::needs_grad({&a, &b})) {
    detail::record(out, "mul", {&a, &b},
                   [xs = storage(a), ys = storage(b)](std::span<const Real> g, detail::GradSink& sink) {
                     if (sink.wants(0)) {
                       auto gx = sink[0];
                       for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * (*ys)[i];
                     }
                     if (sink.wants(1)) {
                       auto gy = sink[1];
                       for (std::size_t i = 0; i < g.size(); ++i) gy[i] += g[i] * (*xs)[i];
                     }
                   });
  }
  return out;
}

Tensor scale(const Tensor& x, Real factor) {
  require_defined("scale", x);
  detail::check_finite("scale", {&x});
  Tensor out = Tensor::zeros(x.shape());
  auto o = out.data();
  auto in = x.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = in[i] * factor;
  if (detail::needs_grad({&x})) {
    detail::record(out, "scale", {&x}, [factor](std::span<const Real> g, detail::GradSink& sink) {
      auto gx = sink[0];
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * factor;
    });
  }
  return out;
}

Tensor add_broadcast(const Tensor& x, const Tensor& y) {
  const Shape& xs = x.shape();
  const Shape& ys = y.shape();
  if (ys.size() > xs.size() || !std::equal(ys.rbegin(), ys.rend(), xs.rbegin())) {
    shape_fail("add_broadcast", "second operand must match a trailing suffix of the first", xs, ys);
  }
  detail::check_finite("add_broadcast", {&x, &y});
  const std::size_t inner = y.numel();
  const std::size_t outer = inner == 0 ? 0 : x.numel() / inner;
  Tensor out = Tensor::zeros(xs);
  auto o = out.data();
  auto a = x.data();
  auto b = y.data();
  for (std::size_t r = 0; r < outer; ++r) {
    for (std::size_t i = 0; i < inner; ++i) o[r * inner + i] = a[r * inner + i] + b[i];
  }
  if (detail::needs_grad({&x, &y})) {
    detail::record(out, "add_broadcast", {&x, &y},
                   [outer, inner](std::span<const Real> g, detail::GradSink& sink) {
                     if (sink.wants(0)) {
                       auto gx = sink[0];
                       for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
                     }
                     if (sink.wants(1)) {
                       auto gy = sink[1];
                       for (std::size_t r = 0; r < outer; ++r) {
                         for (std::size_t i = 0; i < inner; ++i) gy[i] += g[r * inner + i];
                       }
                     }
                   });
  }
  return out;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_defined("matmul", a);
  require_defined("matmul", b);
  if (a.rank() < 1 || b.rank() != 2 || a.shape().back() != b.dim(0)) {
    shape_fail("matmul", "inner dimensions do not conform", a.shape(), b.shape());
  }
  detail::check_finite("matmul", {&a, &b});
  const std::size_t k = b.dim(0);
  const std::size_t n = b.dim(1);
  const std::size_t m = a.numel() / k;
  Shape out_shape = a.shape();
  out_shape.back() = n;
  Tensor out = Tensor::zeros(out_shape);
  CMapMat A(a.data().data(), m, k);
  CMapMat B(b.data().data(), k, n);
  MapMat C(out.data().data(), m, n);
  C.noalias() = A * B;
  if (detail::needs_grad({&a, &b})) {
    detail::record(out, "matmul", {&a, &b},
                   [as = storage(a), bs = storage(b), m, k, n](std::span<const Real> g,
                                                                detail::GradSink& sink) {
                     CMapMat G(g.data(), m, n);
                     if (sink.wants(0)) {
                       MapMat GA(sink[0].data(), m, k);
                       GA.noalias() += G * CMapMat(bs->data(), k, n).transpose();
                     }
                     if (sink.wants(1)) {
                       MapMat GB(sink[1].data(), k, n);
                       GB.noalias() += CMapMat(as->data(), m, k).transpose() * G;
                     }
                   });
  }
  return out;
}

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  Tensor y = matmul(x, weight);
  return bias.defined() ? add_broadcast(y, bias) : y;
}

std::size_t conv_out_length(std::size_t length, std::size_t kernel, std::size_t stride) {
  const std::size_t padded = length + 2 * (kernel / 2);
  if (kernel == 0 || stride == 0 || padded < kernel) return 0;
  return (padded - kernel) / stride + 1;
}

Tensor conv1d(const Tensor& x, const Tensor& weight, const Tensor& bias, std::size_t stride) {
  require_defined("conv1d", x);
  require_defined("conv1d", weight);
  if (stride < 1) throw ValueError("conv1d: stride must be >= 1");
  if (x.rank() != 3 || weight.rank() != 3 || weight.dim(1) != x.dim(2)) {
    shape_fail("conv1d", "expected x [B,T,Cin] and weight [K,Cin,Cout]", x.shape(), weight.shape());
  }
  const std::size_t batch = x.dim(0), len = x.dim(1), cin = x.dim(2);
  const std::size_t kernel = weight.dim(0), cout = weight.dim(2);
  if (kernel < 1) throw ValueError("conv1d: kernel must be >= 1");
  if (bias.defined() && bias.shape() != Shape{cout}) {
    shape_fail("conv1d", "bias must be [Cout]", bias.shape(), weight.shape());
  }
  if (len + 2 * (kernel / 2) < kernel) {
    shape_fail("conv1d", "input shorter than kernel", x.shape(), weight.shape());
  }
  detail::check_finite("conv1d", {&x, &weight, &bias});
  const std::size_t pad = kernel / 2;
  const std::size_t out_len = conv_out_length(len, kernel, stride);
  const std::size_t cols = kernel * cin;

  // im2col for every utterance, kept for the weight gradient.
  auto col = std::make_shared<std::vector<Real>>(batch * out_len * cols, 0.0);
  auto xd = x.data();
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t t = 0; t < out_len; ++t) {
      Real* row = col->data() + (b * out_len + t) * cols;
      for (std::size_t k = 0; k < kernel; ++k) {
        const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(t * stride + k) - static_cast<std::ptrdiff_t>(pad);
        if (src < 0 || src >= static_cast<std::ptrdiff_t>(len)) continue;
        std::copy_n(xd.data() + (b * len + src) * cin, cin, row + k * cin);
      }
    }
  }
  Tensor out = Tensor::zeros({batch, out_len, cout});
  const std::size_t rows = batch * out_len;
  MapMat O(out.data().data(), rows, cout);
  O.noalias() = CMapMat(col->data(), rows, cols) * CMapMat(weight.data().data(), cols, cout);
  if (bias.defined()) {
    auto bd = bias.data();
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < cout; ++c) O(r, c) += bd[c];
    }
  }
  if (detail::needs_grad({&x, &weight, &bias})) {
    const bool has_bias = bias.defined();
    auto fn = [col, ws = storage(weight), batch, len, cin, kernel, cout, out_len, stride, pad, cols, rows,
               has_bias](std::span<const Real> g, detail::GradSink& sink) {
      CMapMat G(g.data(), rows, cout);
      if (sink.wants(1)) {
        MapMat GW(sink[1].data(), cols, cout);
        GW.noalias() += CMapMat(col->data(), rows, cols).transpose() * G;
      }
      if (has_bias && sink.wants(2)) {
        auto gb = sink[2];
        for (std::size_t r = 0; r < rows; ++r) {
          for (std::size_t c = 0; c < cout; ++c) gb[c] += G(r, c);
        }
      }
      if (sink.wants(0)) {
        RowMat gcol = G * CMapMat(ws->data(), cols, cout).transpose();
        auto gx = sink[0];
        for (std::size_t b = 0; b < batch; ++b) {
          for (std::size_t t = 0; t < out_len; ++t) {
            const Real* row = gcol.data() + (b * out_len + t) * cols;
            for (std::size_t k = 0; k < kernel; ++k) {
              const std::ptrdiff_t src =
                  static_cast<std::ptrdiff_t>(t * stride + k) - static_cast<std::ptrdiff_t>(pad);
              if (src < 0 || src >= static_cast<std::ptrdiff_t>(len)) continue;
              Real* dst = gx.data() + (b * len + src) * cin;
              for (std::size_t c = 0; c < cin; ++c) dst[c] += row[k * cin + c];
            }
          }
        }
      }
    };
    if (has_bias) {
      detail::record(out, "conv1d", {&x, &weight, &bias}, std::move(fn));
    } else {
      detail::record(out, "conv1d", {&x, &weight}, std::move(fn));
    }
  }
  return out;
}

Tensor depthwise_conv1d(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  require_defined("depthwise_conv1d", x);
  if (x.rank() != 3 || weight.rank() != 2 || weight.dim(1) != x.dim(2)) {
    shape_fail("depthwise_conv1d", "expected x [B,T,C] and weight [K,C]", x.shape(), weight.shape());
  }
  const std::size_t batch = x.dim(0), len = x.dim(1), ch = x.dim(2), kernel = weight.dim(0);
  if (kernel < 1 || kernel % 2 == 0) throw ValueError("depthwise_conv1d: kernel must be odd and >= 1");
  if (!bias.defined() || bias.shape() != Shape{ch}) {
    shape_fail("depthwise_conv1d", "bias must be [C]", bias.defined() ? bias.shape() : Shape{}, x.shape());
  }
  detail::check_finite("depthwise_conv1d", {&x, &weight, &bias});
  const std::ptrdiff_t pad = static_cast<std::ptrdiff_t>(kernel / 2);
  Tensor out = Tensor::zeros(x.shape());
  auto o = out.data();
  auto xd = x.data();
  auto wd = weight.data();
  auto bd = bias.data();
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t t = 0; t < len; ++t) {
      Real* dst = o.data() + (b * len + t) * ch;
      for (std::size_t c = 0; c < ch; ++c) dst[c] = bd[c];
      for (std::size_t k = 0; k < kernel; ++k) {
        const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(t + k) - pad;
        if (src < 0 || src >= static_cast<std::ptrdiff_t>(len)) continue;
        const Real* in = xd.data() + (b * len + src) * ch;
        const Real* w = wd.data() + k * ch;
        for (std::size_t c = 0; c < ch; ++c) dst[c] += w[c] * in[c];
      }
    }
  }
  if (detail::needs_grad({&x, &weight, &bias})) {
    detail::record(out, "depthwise_conv1d", {&x, &weight, &bias},
                   [xs = storage(x), ws = storage(weight), batch, len, ch, kernel, pad](
                       std::span<const Real> g, detail::GradSink& sink) {
                     const bool gx_on = sink.wants(0), gw_on = sink.wants(1), gb_on = sink.wants(2);
                     std::span<Real> gx = gx_on ? sink[0] : std::span<Real>{};
                     std::span<Real> gw = gw_on ? sink[1] : std::span<Real>{};
                     std::span<Real> gb = gb_on ? sink[2] : std::span<Real>{};
                     for (std::size_t b = 0; b < batch; ++b) {
                       for (std::size_t t = 0; t < len; ++t) {
                         const Real* go = g.data() + (b * len + t) * ch;
                         if (gb_on) {
                           for (std::size_t c = 0; c < ch; ++c) gb[c] += go[c];
                         }
                         for (std::size_t k = 0; k < kernel; ++k) {
                           const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(t + k) - pad;
                           if (src < 0 || src >= static_cast<std::ptrdiff_t>(len)) continue;
                           const std::size_t off = (b * len + src) * ch;
                           if (gw_on) {
                             const Real* in = xs->data() + off;
                             Real* dw = gw.data() + k * ch;
                             for (std::size_t c = 0; c < ch; ++c) dw[c] += go[c] * in[c];
                           }
                           if (gx_on) {
                             const Real* w = ws->data() + k * ch;
                             Real* dx = gx.data() + off;
                             for (std::size_t c = 0; c < ch; ++c) dx[c] += go[c] * w[c];
                           }
                         }
                       }
                     }
                   });
  }
  return out;
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, Real eps) {
  require_defined("layer_norm", x);
  const std::size_t d = trailing(x);
  if (x.rank() < 1 || gamma.shape() != Shape{d} || beta.shape() != Shape{d}) {
    shape_fail("layer_norm", "gamma/beta must match the trailing axis", x.shape(), gamma.shape());
  }
  detail::check_finite("layer_norm", {&x, &gamma, &beta});
  const std::size_t rows = x.numel() / d;
  Tensor out = Tensor::zeros(x.shape());
  auto xhat = std::make_shared<std::vector<Real>>(x.numel());
  auto rstd = std::make_shared<std::vector<Real>>(rows);
  auto xd = x.data();
  auto gd = gamma.data();
  auto bd = beta.data();
  auto o = out.data();
  for (std::size_t r = 0; r < rows; ++r) {
    const Real* in = xd.data() + r * d;
    Real mu = 0.0;
    for (std::size_t i = 0; i < d; ++i) mu += in[i];
    mu /= static_cast<Real>(d);
    Real var = 0.0;
    for (std::size_t i = 0; i < d; ++i) var += (in[i] - mu) * (in[i] - mu);
    var /= static_cast<Real>(d);
    const Real rs = 1.0 / std::sqrt(var + eps);
    (*rstd)[r] = rs;
    for (std::size_t i = 0; i < d; ++i) {
      const Real h = (in[i] - mu) * rs;
      (*xhat)[r * d + i] = h;
      o[r * d + i] = h * gd[i] + bd[i];
    }
  }
  if (detail::needs_grad({&x, &gamma, &beta})) {
    detail::record(out, "layer_norm", {&x, &gamma, &beta},
                   [xhat, rstd, gs = storage(gamma), rows, d](std::span<const Real> g, detail::GradSink& sink) {
                     const bool gx_on = sink.wants(0), gg_on = sink.wants(1), gb_on = sink.wants(2);
                     std::span<Real> gx = gx_on ? sink[0] : std::span<Real>{};
                     std::span<Real> gg = gg_on ? sink[1] : std::span<Real>{};
                     std::span<Real> gb = gb_on ? sink[2] : std::span<Real>{};
                     std::vector<Real> dh(d);
                     for (std::size_t r = 0; r < rows; ++r) {
                       const Real* go = g.data() + r * d;
                       const Real* h = xhat->data() + r * d;
                       Real sum_dh = 0.0, sum_dh_h = 0.0;
                       for (std::size_t i = 0; i < d; ++i) {
                         if (gg_on) gg[i] += go[i] * h[i];
                         if (gb_on) gb[i] += go[i];
                         dh[i] = go[i] * (*gs)[i];
                         sum_dh += dh[i];
                         sum_dh_h += dh[i] * h[i];
                       }
                       if (!gx_on) continue;
                       const Real inv_d = 1.0 / static_cast<Real>(d);
                       Real* dx = gx.data() + r * d;
                       for (std::size_t i = 0; i < d; ++i) {
                         dx[i] += (*rstd)[r] * (dh[i] - inv_d * sum_dh - h[i] * inv_d * sum_dh_h);
                       }
                     }
                   });
  }
  return out;
}

Tensor softmax(const Tensor& x) {
  require_defined("softmax", x);
  detail::check_finite("softmax", {&x});
  const std::size_t d = trailing(x);
  const std::size_t rows = x.numel() / d;
  Tensor out = Tensor::zeros(x.shape());
  auto xd = x.data();
  auto o = out.data();
  for (std::size_t r = 0; r < rows; ++r) {
    const Real* in = xd.data() + r * d;
    Real* dst = o.data() + r * d;
    const Real mx = *std::max_element(in, in + d);
    Real z = 0.0;
    for (std::size_t i = 0; i < d; ++i) z += (dst[i] = std::exp(in[i] - mx));
    for (std::size_t i = 0; i < d; ++i) dst[i] /= z;
  }
  if (detail::needs_grad({&x})) {
    detail::record(out, "softmax", {&x}, [ys = storage(out), rows, d](std::span<const Real> g, detail::GradSink& sink) {
      auto gx = sink[0];
      for (std::size_t r = 0; r < rows; ++r) {
        const Real* y = ys->data() + r * d;
        const Real* go = g.data() + r * d;
        Real dot = 0.0;
        for (std::size_t i = 0; i < d; ++i) dot += go[i] * y[i];
        for (std::size_t i = 0; i < d; ++i) gx[r * d + i] += y[i] * (go[i] - dot);
      }
    });
  }
  return out;
}

Tensor log_softmax(const Tensor& x) {
  require_defined("log_softmax", x);
  detail::check_finite("log_softmax", {&x});
  const std::size_t d = trailing(x);
  const std::size_t rows = x.numel() / d;
  Tensor out = Tensor::zeros(x.shape());
  auto xd = x.data();
  auto o = out.data();
  for (std::size_t r = 0; r < rows; ++r) {
    const Real* in = xd.data() + r * d;
    Real* dst = o.data() + r * d;
    const Real mx = *std::max_element(in, in + d);
    Real z = 0.0;
    for (std::size_t i = 0; i < d; ++i) z += std::exp(in[i] - mx);
    const Real lz = mx + std::log(z);
    for (std::size_t i = 0; i < d; ++i) dst[i] = in[i] - lz;
  }
  if (detail::needs_grad({&x})) {
    detail::record(out, "log_softmax", {&x},
                   [ys = storage(out), rows, d](std::span<const Real> g, detail::GradSink& sink) {
                     auto gx = sink[0];
                     for (std::size_t r = 0; r < rows; ++r) {
                       const Real* y = ys->data() + r * d;
                       const Real* go = g.data() + r * d;
                       Real total = 0.0;
                       for (std::size_t i = 0; i < d; ++i) total += go[i];
                       for (std::size_t i = 0; i < d; ++i) gx[r * d + i] += go[i] - std::exp(y[i]) * total;
                     }
                   });
  }
  return out;
}

Tensor silu(const Tensor& x) {
  require_defined("silu", x);
  detail::check_finite("silu", {&x});
  Tensor out = Tensor::zeros(x.shape());
  auto xd = x.data();
  auto o = out.data();
  auto sig = std::make_shared<std::vector<Real>>(o.size());
  sigmoid_into(xd.data(), sig->data(), o.size());
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = xd[i] * (*sig)[i];
  if (detail::needs_grad({&x})) {
    detail::record(out, "silu", {&x}, [xs = storage(x), sig](std::span<const Real> g, detail::GradSink& sink) {
      auto gx = sink[0];
      for (std::size_t i = 0; i < g.size(); ++i) {
        const Real v = (*xs)[i];
        const Real s = (*sig)[i];
        gx[i] += g[i] * s * (1.0 + v * (1.0 - s));
      }
    });
  }
  return out;
}

Tensor relu(const Tensor& x) {
  require_defined("relu", x);
  detail::check_finite("relu", {&x});
  Tensor out = Tensor::zeros(x.shape());
  auto xd = x.data();
  auto o = out.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = xd[i] > 0.0 ? xd[i] : 0.0;
  if (detail::needs_grad({&x})) {
    detail::record(out, "relu", {&x}, [xs = storage(x)](std::span<const Real> g, detail::GradSink& sink) {
      auto gx = sink[0];
      for (std::size_t i = 0; i < g.size(); ++i) {
        if ((*xs)[i] > 0.0) gx[i] += g[i];
      }
    });
  }
  return out;
}

Tensor glu(const Tensor& x) {
  require_defined("glu", x);
  const std::size_t d = trailing(x);
  if (x.rank() < 1 || d % 2 != 0) shape_fail("glu", "trailing axis must be even", x.shape());
  detail::check_finite("glu", {&x});
  const std::size_t half = d / 2;
  const std::size_t rows = x.numel() / d;
  Shape out_shape = x.shape();
  out_shape.back() = half;
  Tensor out = Tensor::zeros(out_shape);
  auto gate = std::make_shared<std::vector<Real>>(rows * half);
  auto xd = x.data();
  auto o = out.data();
  for (std::size_t r = 0; r < rows; ++r) {
    Real* gr = gate->data() + r * half;
    sigmoid_into(xd.data() + r * d + half, gr, half);
    for (std::size_t i = 0; i < half; ++i) o[r * half + i] = xd[r * d + i] * gr[i];
  }
  if (detail::needs_grad({&x})) {
    detail::record(out, "glu", {&x},
                   [xs = storage(x), gate, rows, half, d](std::span<const Real> g, detail::GradSink& sink) {
                     auto gx = sink[0];
                     for (std::size_t r = 0; r < rows; ++r) {
                       for (std::size_t i = 0; i < half; ++i) {
                         const Real s = (*gate)[r * half + i];
                         const Real a = (*xs)[r * d + i];
                         const Real go = g[r * half + i];
                         gx[r * d + i] += go * s;
                         gx[r * d + half + i] += go * a * s * (1.0 - s);
                       }
                     }
                   });
  }
  return out;
}

Tensor embedding(std::span<const std::int32_t> ids, const Shape& id_shape, const Tensor& table) {
  require_defined("embedding", table);
  if (table.rank() != 2) shape_fail("embedding", "table must be [V,D]", table.shape());
  if (shape_numel(id_shape) != ids.size()) {
    shape_fail("embedding", "id count does not match id shape", id_shape, Shape{ids.size()});
  }
  const std::size_t vocab = table.dim(0), dim = table.dim(1);
  for (std::int32_t id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= vocab) {
      throw ValueError("embedding: id " + std::to_string(id) + " outside vocabulary of " + std::to_string(vocab));
    }
  }
  Shape out_shape = id_shape;
  out_shape.push_back(dim);
  Tensor out = Tensor::zeros(out_shape);
  auto td = table.data();
  auto o = out.data();
  for (std::size_t i = 0; i < ids.size(); ++i) {
    std::copy_n(td.data() + static_cast<std::size_t>(ids[i]) * dim, dim, o.data() + i * dim);
  }
  if (detail::needs_grad({&table})) {
    std::vector<std::int32_t> saved(ids.begin(), ids.end());
    detail::record(out, "embedding", {&table},
                   [saved = std::move(saved), dim](std::span<const Real> g, detail::GradSink& sink) {
                     auto gt = sink[0];
                     for (std::size_t i = 0; i < saved.size(); ++i) {
                       Real* dst = gt.data() + static_cast<std::size_t>(saved[i]) * dim;
                       for (std::size_t j = 0; j < dim; ++j) dst[j] += g[i * dim + j];
                     }
                   });
  }
  return out;
}

Tensor sinusoidal_positions(std::size_t length, std::size_t dim) {
  Tensor out = Tensor::zeros({length, dim});
  auto o = out.data();
  const std::size_t half = dim / 2;
  for (std::size_t t = 0; t < length; ++t) {
    for (std::size_t i = 0; i < half; ++i) {
      const Real freq = std::exp(-std::log(10000.0) * static_cast<Real>(i) / static_cast<Real>(std::max<std::size_t>(half - 1, 1)));
      o[t * dim + i] = std::sin(static_cast<Real>(t) * freq);
      o[t * dim + half + i] = std::cos(static_cast<Real>(t) * freq);
    }
  }
  return out;
}

Tensor attention(const Tensor& q, const Tensor& k, const Tensor& v, std::size_t heads,
                 std::span<const std::size_t> key_lengths, bool causal) {
  require_defined("attention", q);
  if (q.rank() != 3 || k.rank() != 3 || v.shape() != k.shape() || q.dim(0) != k.dim(0) || q.dim(2) != k.dim(2)) {
    shape_fail("attention", "expected q [B,Tq,D] and k, v [B,Tk,D]", q.shape(), k.shape());
  }
  const std::size_t batch = q.dim(0), tq = q.dim(1), tk = k.dim(1), d = q.dim(2);
  if (heads == 0 || d % heads != 0) {
    throw ShapeError("attention: model dim " + std::to_string(d) + " not divisible by " + std::to_string(heads) + " heads");
  }
  if (!key_lengths.empty() && key_lengths.size() != batch) {
    throw ShapeError("attention: " + std::to_string(key_lengths.size()) + " key lengths for batch of " +
                     std::to_string(batch));
  }
  detail::check_finite("attention", {&q, &k, &v});
  const std::size_t dh = d / heads;
  const Real scl = 1.0 / std::sqrt(static_cast<Real>(dh));
  auto probs = std::make_shared<std::vector<Real>>(batch * heads * tq * tk, 0.0);
  Tensor out = Tensor::zeros({batch, tq, d});
  auto qd = q.data();
  auto kd = k.data();
  auto vd = v.data();
  auto od = out.data();
  RowMat scores(tq, tk);
  for (std::size_t b = 0; b < batch; ++b) {
    const std::size_t valid = key_lengths.empty() ? tk : std::min(key_lengths[b], tk);
    for (std::size_t h = 0; h < heads; ++h) {
      CSMapMat Q(qd.data() + b * tq * d + h * dh, tq, dh, Eigen::OuterStride<>(d));
      CSMapMat K(kd.data() + b * tk * d + h * dh, tk, dh, Eigen::OuterStride<>(d));
      CSMapMat V(vd.data() + b * tk * d + h * dh, tk, dh, Eigen::OuterStride<>(d));
      scores.noalias() = (Q * K.transpose()) * scl;
      MapMat P(probs->data() + ((b * heads + h) * tq) * tk, tq, tk);
      for (std::size_t i = 0; i < tq; ++i) {
        const std::size_t limit = causal ? std::min(valid, i + 1) : valid;
        if (limit == 0) continue;
        Real mx = kNegInf;
        for (std::size_t j = 0; j < limit; ++j) mx = std::max(mx, scores(i, j));
        Real z = 0.0;
        for (std::size_t j = 0; j < limit; ++j) z += (P(i, j) = std::exp(scores(i, j) - mx));
        for (std::size_t j = 0; j < limit; ++j) P(i, j) /= z;
      }
      SMapMat O(od.data() + b * tq * d + h * dh, tq, dh, Eigen::OuterStride<>(d));
      O.noalias() = P * V;
    }
  }
  if (detail::needs_grad({&q, &k, &v})) {
    detail::record(out, "attention", {&q, &k, &v},
                   [probs, qs = storage(q), ks = storage(k), vs = storage(v), batch, heads, tq, tk, d, dh, scl](
                       std::span<const Real> g, detail::GradSink& sink) {
                     const bool gq_on = sink.wants(0), gk_on = sink.wants(1), gv_on = sink.wants(2);
                     Real* gq = gq_on ? sink[0].data() : nullptr;
                     Real* gk = gk_on ? sink[1].data() : nullptr;
                     Real* gv = gv_on ? sink[2].data() : nullptr;
                     RowMat dp(tq, tk);
                     for (std::size_t b = 0; b < batch; ++b) {
                       for (std::size_t h = 0; h < heads; ++h) {
                         CSMapMat Q(qs->data() + b * tq * d + h * dh, tq, dh, Eigen::OuterStride<>(d));
                         CSMapMat K(ks->data() + b * tk * d + h * dh, tk, dh, Eigen::OuterStride<>(d));
                         CSMapMat V(vs->data() + b * tk * d + h * dh, tk, dh, Eigen::OuterStride<>(d));
                         CSMapMat G(g.data() + b * tq * d + h * dh, tq, dh, Eigen::OuterStride<>(d));
                         CMapMat P(probs->data() + ((b * heads + h) * tq) * tk, tq, tk);
                         if (gv_on) {
                           SMapMat GV(gv + b * tk * d + h * dh, tk, dh, Eigen::OuterStride<>(d));
                           GV.noalias() += P.transpose() * G;
                         }
                         if (!gq_on && !gk_on) continue;
                         dp.noalias() = G * V.transpose();
                         for (std::size_t i = 0; i < tq; ++i) {
                           Real dot = 0.0;
                           for (std::size_t j = 0; j < tk; ++j) dot += dp(i, j) * P(i, j);
                           for (std::size_t j = 0; j < tk; ++j) dp(i, j) = P(i, j) * (dp(i, j) - dot) * scl;
                         }
                         if (gq_on) {
                           SMapMat GQ(gq + b * tq * d + h * dh, tq, dh, Eigen::OuterStride<>(d));
                           GQ.noalias() += dp * K;
                         }
                         if (gk_on) {
                           SMapMat GK(gk + b * tk * d + h * dh, tk, dh, Eigen::OuterStride<>(d));
                           GK.noalias() += dp.transpose() * Q;
                         }
                       }
                     }
                   });
  }
  return out;
}

Tensor sum(const Tensor& x) {
  require_defined("sum", x);
  detail::check_finite("sum", {&x});
  Real total = 0.0;
  for (Real v : x.data()) total += v;
  Tensor out = Tensor::scalar(total);
  if (detail::needs_grad({&x})) {
    detail::record(out, "sum", {&x}, [](std::span<const Real> g, detail::GradSink& sink) {
      auto gx = sink[0];
      for (Real& e : gx) e += g[0];
    });
  }
  return out;
}

Tensor mean(const Tensor& x) {
  require_defined("mean", x);
  if (x.numel() == 0) shape_fail("mean", "empty tensor", x.shape());
  return scale(sum(x), 1.0 / static_cast<Real>(x.numel()));
}

Tensor select(const Tensor& x, std::size_t flat_index) {
  require_defined("select", x);
  if (flat_index >= x.numel()) {
    throw ShapeError("select: index " + std::to_string(flat_index) + " outside " + shape_str(x.shape()));
  }
  Tensor out = Tensor::scalar(x.data()[flat_index]);
  if (detail::needs_grad({&x})) {
    detail::record(out, "select", {&x}, [flat_index](std::span<const Real> g, detail::GradSink& sink) {
      sink[0][flat_index] += g[0];
    });
  }
  return out;
}

Tensor weighted_sum(std::span<const Tensor> terms, std::span<const Real> weights) {
  if (terms.size() != weights.size() || terms.empty()) {
    throw ShapeError("weighted_sum: " + std::to_string(terms.size()) + " terms for " +
                     std::to_string(weights.size()) + " weights");
  }
  for (const Tensor& t : terms) {
    if (t.numel() != 1) shape_fail("weighted_sum", "terms must be scalars", t.shape());
  }
  Real total = weights[0] * terms[0].item();
  for (std::size_t i = 1; i < terms.size(); ++i) total = total + weights[i] * terms[i].item();
  Tensor out = Tensor::scalar(total);
  bool any = false;
  for (const Tensor& t : terms) any = any || detail::needs_grad({&t});
  if (any) {
    auto node = std::make_shared<detail::Node>();
    node->kind = "weighted_sum";
    node->out_numel = 1;
    for (const Tensor& t : terms) node->inputs.push_back(t.impl());
    std::vector<Real> w(weights.begin(), weights.end());
    node->backward = [w = std::move(w)](std::span<const Real> g, detail::GradSink& sink) {
      for (std::size_t i = 0; i < w.size(); ++i) {
        if (sink.wants(i)) sink[i][0] += g[0] * w[i];
      }
    };
    out.impl()->node = std::move(node);
  }
  return out;
}

Tensor dropout(const Tensor& x, Real p, Rng& rng, bool training) {
  require_defined("dropout", x);
  if (p < 0.0 || p >= 1.0) throw ValueError("dropout: rate must lie in [0, 1)");
  if (!training || p == 0.0) return x;
  const Real keep_scale = 1.0 / (1.0 - p);
  auto mask = std::make_shared<std::vector<Real>>(x.numel());
  for (Real& m : *mask) m = rng.uniform() < p ? 0.0 : keep_scale;
  Tensor out = Tensor::zeros(x.shape());
  auto o = out.data();
  auto xd = x.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = xd[i] * (*mask)[i];
  if (detail::needs_grad({&x})) {
    detail::record(out, "dropout", {&x}, [mask](std::span<const Real> g, detail::GradSink& sink) {
      auto gx = sink[0];
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * (*mask)[i];
    });
  }
  return out;
}

Tensor mask_time(const Tensor& x, std::span<const std::size_t> lengths, Real value) {
  require_defined("mask_time", x);
  if (x.rank() < 2 || lengths.size() != x.dim(0)) {
    shape_fail("mask_time", "expected [B,T,...] with one length per batch row", x.shape(), Shape{lengths.size()});
  }
  const std::size_t batch = x.dim(0), len = x.dim(1);
  const std::size_t inner = len == 0 ? 0 : x.numel() / (batch * len);
  Tensor out = x.clone();
  out.impl()->requires_grad = false;
  auto o = out.data();
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t t = std::min(lengths[b], len); t < len; ++t) {
      std::fill_n(o.data() + (b * len + t) * inner, inner, value);
    }
  }
  if (detail::needs_grad({&x})) {
    std::vector<std::size_t> lens(lengths.begin(), lengths.end());
    detail::record(out, "mask_time", {&x},
                   [lens = std::move(lens), len, inner](std::span<const Real> g, detail::GradSink& sink) {
                     auto gx = sink[0];
                     for (std::size_t b = 0; b < lens.size(); ++b) {
                       const std::size_t keep = std::min(lens[b], len) * inner;
                       const std::size_t off = b * len * inner;
                       for (std::size_t i = 0; i < keep; ++i) gx[off + i] += g[off + i];
                     }
                   });
  }
  return out;
}

}  // namespace fama::num
