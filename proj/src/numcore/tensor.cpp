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

#include "fama/numcore/tensor.hpp"

#include <algorithm>
#include <sstream>

#include "fama/numcore/autograd.hpp"

namespace fama::num {

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) { return full(std::move(shape), 0.0, requires_grad); }

Tensor Tensor::full(Shape shape, Real value, bool requires_grad) {
  auto impl = std::make_shared<detail::TensorImpl>();
  impl->data = std::make_shared<std::vector<Real>>(shape_numel(shape), value);
  impl->shape = std::move(shape);
  impl->requires_grad = requires_grad;
  return Tensor(std::move(impl));
}

Tensor Tensor::from(Shape shape, std::vector<Real> values, bool requires_grad) {
  if (shape_numel(shape) != values.size()) {
    throw ShapeError("tensor: shape " + shape_str(shape) + " holds " +
                     std::to_string(shape_numel(shape)) + " values, got " +
                     std::to_string(values.size()));
  }
  auto impl = std::make_shared<detail::TensorImpl>();
  impl->shape = std::move(shape);
  impl->data = std::make_shared<std::vector<Real>>(std::move(values));
  impl->requires_grad = requires_grad;
  return Tensor(std::move(impl));
}

Tensor Tensor::scalar(Real value, bool requires_grad) { return from({}, {value}, requires_grad); }

const Shape& Tensor::shape() const {
  if (!impl_) throw ValueError("tensor: use of undefined tensor");
  return impl_->shape;
}

std::size_t Tensor::dim(std::size_t axis) const {
  const Shape& s = shape();
  if (axis >= s.size()) {
    throw ShapeError("tensor: axis " + std::to_string(axis) + " out of range for " + shape_str(s));
  }
  return s[axis];
}

std::size_t Tensor::numel() const { return impl_ ? impl_->data->size() : 0; }

std::span<Real> Tensor::data() { return {impl_->data->data(), impl_->data->size()}; }

std::span<const Real> Tensor::data() const { return {impl_->data->data(), impl_->data->size()}; }

Real Tensor::item() const {
  if (numel() != 1) throw ShapeError("tensor: item() on tensor of shape " + shape_str(shape()));
  return (*impl_->data)[0];
}

bool Tensor::requires_grad() const { return impl_ && (impl_->requires_grad || impl_->node); }

void Tensor::set_requires_grad(bool on) {
  if (impl_->node) throw ValueError("tensor: requires_grad can only be set on leaf tensors");
  impl_->requires_grad = on;
}

bool Tensor::is_leaf() const { return !impl_->node; }

std::span<const Real> Tensor::grad() const {
  if (impl_->node) return {impl_->node->grad.data(), impl_->node->grad.size()};
  return {impl_->grad.data(), impl_->grad.size()};
}

std::span<Real> Tensor::mutable_grad() {
  if (impl_->grad.size() != numel()) impl_->grad.assign(numel(), 0.0);
  return {impl_->grad.data(), impl_->grad.size()};
}

void Tensor::zero_grad() { impl_->grad.clear(); }

Tensor Tensor::detach() const {
  auto impl = std::make_shared<detail::TensorImpl>();
  impl->shape = impl_->shape;
  impl->data = impl_->data;
  return Tensor(std::move(impl));
}

Tensor Tensor::clone() const {
  auto impl = std::make_shared<detail::TensorImpl>();
  impl->shape = impl_->shape;
  impl->data = std::make_shared<std::vector<Real>>(*impl_->data);
  impl->requires_grad = impl_->requires_grad && !impl_->node;
  return Tensor(std::move(impl));
}

}  // namespace fama::num
