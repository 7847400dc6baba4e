// Copyright 2026 The RSTG Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "rstg/real.hpp"

RSTG_NAMESPACE_BEGIN

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_to_string(const Shape& shape);

/// Raised when operand shapes are incompatible. The message names both shapes.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a forward op produces NaN or Inf.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Broken engine invariant (e.g. a cycle in the recorded graph).
class InternalError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

struct TensorImpl;
using BackwardFn = std::function<void(TensorImpl& self)>;

struct TensorImpl {
  Shape shape;
  std::vector<real> data;
  // Leaves that require grad own a buffer from construction; intermediate
  // results get one lazily during backward().
  std::vector<real> grad;
  bool requires_grad = false;
  const char* op = "leaf";
  std::vector<std::shared_ptr<TensorImpl>> parents;
  BackwardFn backward;

  bool is_leaf() const { return parents.empty(); }
  std::vector<real>& ensure_grad();
};

/// Dense row-major array with reverse-mode differentiation support.
///
/// A Tensor is a shared handle; copying it aliases the same storage and graph
/// node. Ops never mutate their inputs.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, real fill = real(0), bool requires_grad = false);
  Tensor(Shape shape, std::vector<real> values, bool requires_grad = false);

  static Tensor scalar(real value, bool requires_grad = false);
  static Tensor from_impl(std::shared_ptr<TensorImpl> impl);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t numel() const;

  std::span<const real> data() const;
  std::span<real> mutable_data();
  std::span<const real> grad() const;
  std::span<real> mutable_grad();
  bool has_grad() const;
  bool requires_grad() const;
  void zero_grad();

  real item() const;
  real at(std::initializer_list<std::size_t> index) const;

  /// Fresh leaf holding a copy of the values, detached from the graph.
  Tensor detach(bool requires_grad = false) const;

  TensorImpl* impl() const { return impl_.get(); }
  const std::shared_ptr<TensorImpl>& impl_ptr() const { return impl_; }

 private:
  std::shared_ptr<TensorImpl> impl_;
};

/// Propagates d(loss)/d(x) into every reachable tensor that requires grad.
/// Leaf gradients accumulate across calls until zero_grad().
void backward(const Tensor& loss);

bool grad_enabled();

/// Disables graph recording on this thread for the guard's lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

namespace detail {

/// Wraps a freshly computed buffer into a graph node. Checks finiteness and
/// records `fn` only when grad mode is on and some parent requires grad.
Tensor make_result(Shape shape, std::vector<real> values, const char* op,
                   std::vector<Tensor> parents, BackwardFn fn);

void check_finite(std::span<const real> values, const char* op);

}  // namespace detail

RSTG_NAMESPACE_END
