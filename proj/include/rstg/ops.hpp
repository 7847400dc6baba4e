// Copyright 2026 The RSTG Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "rstg/tensor.hpp"

RSTG_NAMESPACE_BEGIN

enum class ElementwiseOp { add, sub, mul, sigmoid, tanh, relu };

/// Parses "add", "mul", "sigmoid", ... Throws std::invalid_argument on an
/// unknown tag.
ElementwiseOp parse_elementwise_op(std::string_view tag);

/// Binary ops accept equal shapes, a rank-1 `b` broadcast over the rows of
/// `a` (b.size == a's last extent), or an [m,1] column broadcast over an
/// [m,n] `a`. Unary ops ignore `b` and reject it if given.
Tensor elementwise(ElementwiseOp op, const Tensor& a, const std::optional<Tensor>& b = std::nullopt);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor sigmoid(const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor scale(const Tensor& a, real factor);

/// [m,k] x [k,n] -> [m,n].
Tensor matmul(const Tensor& a, const Tensor& b);

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis);
Tensor concat(const Tensor& a, const Tensor& b, std::size_t axis);
/// Half-open range [begin, end) along `axis`.
Tensor slice(const Tensor& a, std::size_t axis, std::size_t begin, std::size_t end);
std::vector<Tensor> split(const Tensor& a, std::size_t axis, const std::vector<std::size_t>& sizes);

enum class ReduceOp { sum, mean, max };

/// Reduces over `axes`, removing them from the shape. The max adjoint routes
/// to the lowest flat index among ties.
Tensor reduce(ReduceOp op, const Tensor& a, std::vector<std::size_t> axes);
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);

Tensor reshape(const Tensor& a, Shape shape);

/// Row gather on a rank-2 tensor: out[r] = a[index[r]].
Tensor gather_rows(const Tensor& a, std::span<const std::size_t> index);
/// Row scatter-add: out[index[r]] += a[r], out has `rows` rows.
Tensor scatter_add_rows(const Tensor& a, std::span<const std::size_t> index, std::size_t rows);
/// Per-row dot product of two [m,n] tensors -> [m,1].
Tensor row_dot(const Tensor& a, const Tensor& b);

/// Softmax of an [m,1] score column within groups given by `segment[r]`.
Tensor segment_softmax(const Tensor& scores, std::span<const std::size_t> segment,
                       std::size_t segments);

/// Sparse linear operator in CSR form, out_rows x in_rows.
struct SparseMap {
  std::size_t out_rows = 0;
  std::size_t in_rows = 0;
  std::vector<std::size_t> row_begin;  // size out_rows + 1
  std::vector<std::size_t> column;
  std::vector<double> weight;

  SparseMap transposed() const;
  /// Dense copy, row-major out_rows x in_rows. Test helper.
  std::vector<double> to_dense() const;
};

/// Applies `map` independently to `batch` stacked blocks of rows:
/// x is [batch*in_rows, c], result is [batch*out_rows, c].
Tensor apply_sparse(const SparseMap& map, const Tensor& x, std::size_t batch);

RSTG_NAMESPACE_END
