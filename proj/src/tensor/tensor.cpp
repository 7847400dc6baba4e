// Copyright 2026 The RSTG Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "rstg/tensor.hpp"

#include <Eigen/Core>
#include <cmath>
#include <sstream>
#include <unordered_map>
#include <utility>

RSTG_NAMESPACE_BEGIN

namespace {

thread_local bool g_grad_enabled = true;

void check_shape(const Shape& shape) {
  for (std::size_t extent : shape) {
    if (extent == 0) {
      throw ShapeError("tensor extents must be positive, got " + shape_to_string(shape));
    }
  }
}

}  // namespace

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t extent : shape) n *= extent;
  return n;
}

std::string shape_to_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << 'x';
    out << shape[i];
  }
  out << ']';
  return out.str();
}

std::vector<real>& TensorImpl::ensure_grad() {
  if (grad.size() != data.size()) grad.assign(data.size(), real(0));
  return grad;
}

Tensor::Tensor(Shape shape, real fill, bool requires_grad) {
  check_shape(shape);
  impl_ = std::make_shared<TensorImpl>();
  impl_->data.assign(shape_numel(shape), fill);
  impl_->shape = std::move(shape);
  impl_->requires_grad = requires_grad;
  if (requires_grad) impl_->ensure_grad();
}

Tensor::Tensor(Shape shape, std::vector<real> values, bool requires_grad) {
  check_shape(shape);
  if (shape_numel(shape) != values.size()) {
    throw ShapeError("shape " + shape_to_string(shape) + " does not match " +
                     std::to_string(values.size()) + " values");
  }
  impl_ = std::make_shared<TensorImpl>();
  impl_->shape = std::move(shape);
  impl_->data = std::move(values);
  impl_->requires_grad = requires_grad;
  if (requires_grad) impl_->ensure_grad();
}

Tensor Tensor::scalar(real value, bool requires_grad) {
  return Tensor(Shape{}, std::vector<real>{value}, requires_grad);
}

Tensor Tensor::from_impl(std::shared_ptr<TensorImpl> impl) {
  Tensor t;
  t.impl_ = std::move(impl);
  return t;
}

const Shape& Tensor::shape() const { return impl_->shape; }

std::size_t Tensor::dim(std::size_t axis) const {
  if (axis >= impl_->shape.size()) {
    throw ShapeError("axis " + std::to_string(axis) + " out of range for " +
                     shape_to_string(impl_->shape));
  }
  return impl_->shape[axis];
}

std::size_t Tensor::numel() const { return impl_->data.size(); }

std::span<const real> Tensor::data() const { return impl_->data; }
std::span<real> Tensor::mutable_data() { return impl_->data; }

std::span<const real> Tensor::grad() const { return impl_->grad; }
std::span<real> Tensor::mutable_grad() { return impl_->ensure_grad(); }

bool Tensor::has_grad() const { return impl_->grad.size() == impl_->data.size(); }
bool Tensor::requires_grad() const { return impl_->requires_grad; }

void Tensor::zero_grad() {
  if (impl_->requires_grad) impl_->grad.assign(impl_->data.size(), real(0));
}

real Tensor::item() const {
  if (numel() != 1) {
    throw ShapeError("item() needs a single-element tensor, got " + shape_to_string(shape()));
  }
  return impl_->data[0];
}

real Tensor::at(std::initializer_list<std::size_t> index) const {
  const Shape& s = shape();
  if (index.size() != s.size()) {
    throw ShapeError("index rank does not match " + shape_to_string(s));
  }
  std::size_t flat = 0;
  std::size_t axis = 0;
  for (std::size_t i : index) {
    if (i >= s[axis]) throw ShapeError("index out of range for " + shape_to_string(s));
    flat = flat * s[axis] + i;
    ++axis;
  }
  return impl_->data[flat];
}

Tensor Tensor::detach(bool requires_grad) const {
  return Tensor(shape(), impl_->data, requires_grad);
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

namespace detail {

void check_finite(std::span<const real> values, const char* op) {
  if (Eigen::Map<const Eigen::Array<real, Eigen::Dynamic, 1>>(values.data(), static_cast<Eigen::Index>(values.size()))
          .allFinite()) {
    return;
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      std::ostringstream msg;
      msg << "non-finite value " << values[i] << " at flat index " << i << " produced by "
          << op;
      throw NumericError(msg.str());
    }
  }
}

Tensor make_result(Shape shape, std::vector<real> values, const char* op,
                   std::vector<Tensor> parents, BackwardFn fn) {
  check_finite(values, op);
  auto impl = std::make_shared<TensorImpl>();
  impl->shape = std::move(shape);
  impl->data = std::move(values);
  impl->op = op;
  if (g_grad_enabled) {
    bool any = false;
    for (const Tensor& p : parents) any = any || p.requires_grad();
    if (any) {
      impl->requires_grad = true;
      impl->parents.reserve(parents.size());
      for (const Tensor& p : parents) impl->parents.push_back(p.impl_ptr());
      impl->backward = std::move(fn);
    }
  }
  return Tensor::from_impl(std::move(impl));
}

}  // namespace detail

void backward(const Tensor& loss) {
  if (!loss.defined() || loss.numel() != 1) {
    throw ShapeError("backward() needs a scalar loss, got " +
                     (loss.defined() ? shape_to_string(loss.shape()) : std::string("<undefined>")));
  }
  TensorImpl* root = loss.impl();
  if (!root->requires_grad) return;

  // Iterative post-order DFS; a node met again while still on the stack
  // means the recorded graph has a cycle.
  enum class Mark { on_stack, done };
  std::unordered_map<TensorImpl*, Mark> marks;
  std::vector<TensorImpl*> order;
  std::vector<std::pair<TensorImpl*, std::size_t>> stack;
  stack.emplace_back(root, 0);
  marks[root] = Mark::on_stack;
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      TensorImpl* parent = node->parents[next++].get();
      if (!parent->requires_grad) continue;
      auto it = marks.find(parent);
      if (it == marks.end()) {
        marks[parent] = Mark::on_stack;
        stack.emplace_back(parent, 0);
      } else if (it->second == Mark::on_stack) {
        throw InternalError("cycle detected in the recorded graph");
      }
    } else {
      marks[node] = Mark::done;
      order.push_back(node);
      stack.pop_back();
    }
  }

  for (TensorImpl* node : order) {
    if (!node->is_leaf()) node->grad.clear();
  }
  root->ensure_grad()[0] += real(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    TensorImpl* node = *it;
    if (node->is_leaf() || !node->backward) continue;
    node->ensure_grad();
    node->backward(*node);
  }
  for (TensorImpl* node : order) {
    if (!node->is_leaf()) {
      node->grad.clear();
      node->grad.shrink_to_fit();
    }
  }
}

RSTG_NAMESPACE_END
