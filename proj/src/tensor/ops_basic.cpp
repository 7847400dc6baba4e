// Copyright 2026 The RSTG Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <string>

#include "rstg/ops.hpp"

RSTG_NAMESPACE_BEGIN

namespace {

using RowMat = Eigen::Matrix<real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using ConstMapMat = Eigen::Map<const RowMat>;

enum class Broadcast { same, row_vector, column };

Broadcast classify(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() == b.shape()) return Broadcast::same;
  if (b.rank() == 1 && a.rank() >= 1 && a.shape().back() == b.dim(0)) return Broadcast::row_vector;
  if (a.rank() == 2 && b.rank() == 2 && b.dim(1) == 1 && b.dim(0) == a.dim(0)) {
    return Broadcast::column;
  }
  throw ShapeError(std::string(op) + ": incompatible shapes " + shape_to_string(a.shape()) +
                   " and " + shape_to_string(b.shape()));
}

using Arr = Eigen::Array<real, Eigen::Dynamic, 1>;
using MapArr = Eigen::Map<Arr>;
using ConstMapArr = Eigen::Map<const Arr>;
using RowArr = Eigen::Array<real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapRowArr = Eigen::Map<RowArr>;
using ConstMapRowArr = Eigen::Map<const RowArr>;

// out = a (op) b with b expanded to a's [rows, cols] layout.
void binary_forward(ElementwiseOp op, Broadcast mode, const real* a, const real* b, real* out, std::size_t rows,
                    std::size_t cols) {
  const auto r = static_cast<Eigen::Index>(rows), c = static_cast<Eigen::Index>(cols);
  ConstMapRowArr A(a, r, c);
  MapRowArr O(out, r, c);
  auto apply = [&](const auto& B) {
    if (op == ElementwiseOp::add) O = A + B;
    else if (op == ElementwiseOp::sub) O = A - B;
    else O = A * B;
  };
  switch (mode) {
    case Broadcast::same: apply(ConstMapRowArr(b, r, c)); break;
    case Broadcast::row_vector: apply(Eigen::Map<const Eigen::Array<real, 1, Eigen::Dynamic>>(b, c).replicate(r, 1)); break;
    case Broadcast::column: apply(ConstMapArr(b, r).replicate(1, c)); break;
  }
}

Tensor binary(ElementwiseOp op, const Tensor& a, const Tensor& b) {
  const char* name = op == ElementwiseOp::add ? "add" : op == ElementwiseOp::sub ? "sub" : "mul";
  const Broadcast mode = classify(a, b, name);
  const std::size_t n = a.numel();
  const std::size_t cols = a.shape().empty() ? 1 : a.shape().back();
  const std::size_t rows = cols ? n / cols : 0;
  std::vector<real> out(n);
  if (n) binary_forward(op, mode, a.data().data(), b.data().data(), out.data(), rows, cols);
  return detail::make_result(a.shape(), std::move(out), name, {a, b}, [op, mode, rows, cols](TensorImpl& self) {
    TensorImpl& pa = *self.parents[0];
    TensorImpl& pb = *self.parents[1];
    const auto r = static_cast<Eigen::Index>(rows), c = static_cast<Eigen::Index>(cols);
    ConstMapRowArr G(self.grad.data(), r, c);
    if (pa.requires_grad) {
      MapRowArr GA(pa.ensure_grad().data(), r, c);
      if (op != ElementwiseOp::mul) {
        GA += G;
      } else {
        switch (mode) {
          case Broadcast::same: GA += G * ConstMapRowArr(pb.data.data(), r, c); break;
          case Broadcast::row_vector:
            GA += G * Eigen::Map<const Eigen::Array<real, 1, Eigen::Dynamic>>(pb.data.data(), c).replicate(r, 1);
            break;
          case Broadcast::column: GA += G * ConstMapArr(pb.data.data(), r).replicate(1, c); break;
        }
      }
    }
    if (pb.requires_grad) {
      // Plain loops: Eigen reductions peel by address, which would make the
      // summation order depend on buffer alignment.
      real* gb = pb.ensure_grad().data();
      const real* g = self.grad.data();
      const real* av = pa.data.data();
      const bool product = op == ElementwiseOp::mul;
      const real sign = op == ElementwiseOp::sub ? real(-1) : real(1);
      for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) {
          const std::size_t k = i * cols + j;
          const real v = product ? g[k] * av[k] : sign * g[k];
          switch (mode) {
            case Broadcast::same: gb[k] += v; break;
            case Broadcast::row_vector: gb[j] += v; break;
            case Broadcast::column: gb[i] += v; break;
          }
        }
      }
    }
  });
}

// Applies an Eigen array function through an aligned fixed-size buffer so each
// element takes the same (packet) code path whatever the buffer address.
template <typename F>
void apply_chunked(std::span<const real> in, std::span<real> out, F f) {
  constexpr std::size_t kChunk = 16;
  alignas(64) Eigen::Array<real, kChunk, 1> buf;
  for (std::size_t i = 0; i < in.size(); i += kChunk) {
    const std::size_t n = std::min(kChunk, in.size() - i);
    buf.setZero();
    std::copy_n(in.begin() + static_cast<std::ptrdiff_t>(i), n, buf.data());
    buf = f(buf);
    std::copy_n(buf.data(), n, out.begin() + static_cast<std::ptrdiff_t>(i));
  }
}

Tensor unary(ElementwiseOp op, const Tensor& a) {
  auto av = a.data();
  std::vector<real> out(av.size());
  const char* name = "sigmoid";
  switch (op) {
    case ElementwiseOp::sigmoid:
      apply_chunked(av, out, [](const auto& x) { return real(1) / (real(1) + (-x).exp()); });
      break;
    case ElementwiseOp::tanh:
      name = "tanh";
      apply_chunked(av, out, [](const auto& x) { return x.tanh(); });
      break;
    case ElementwiseOp::relu:
      name = "relu";
      for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] > real(0) ? av[i] : real(0);
      break;
    default:
      throw std::invalid_argument("not a unary op");
  }
  return detail::make_result(a.shape(), std::move(out), name, {a}, [op](TensorImpl& self) {
    TensorImpl& pa = *self.parents[0];
    if (!pa.requires_grad) return;
    auto& ga = pa.ensure_grad();
    const auto& y = self.data;
    const auto& g = self.grad;
    switch (op) {
      case ElementwiseOp::sigmoid:
        for (std::size_t i = 0; i < y.size(); ++i) ga[i] += g[i] * y[i] * (real(1) - y[i]);
        break;
      case ElementwiseOp::tanh:
        for (std::size_t i = 0; i < y.size(); ++i) ga[i] += g[i] * (real(1) - y[i] * y[i]);
        break;
      default:
        for (std::size_t i = 0; i < y.size(); ++i) {
          if (pa.data[i] > real(0)) ga[i] += g[i];
        }
        break;
    }
  });
}

void require_rank2(const Tensor& a, const char* op) {
  if (a.rank() != 2) {
    throw ShapeError(std::string(op) + " expects a rank-2 tensor, got " + shape_to_string(a.shape()));
  }
}

}  // namespace

ElementwiseOp parse_elementwise_op(std::string_view tag) {
  if (tag == "add") return ElementwiseOp::add;
  if (tag == "sub") return ElementwiseOp::sub;
  if (tag == "mul") return ElementwiseOp::mul;
  if (tag == "sigmoid") return ElementwiseOp::sigmoid;
  if (tag == "tanh") return ElementwiseOp::tanh;
  if (tag == "relu") return ElementwiseOp::relu;
  throw std::invalid_argument("unknown elementwise op tag '" + std::string(tag) + "'");
}

Tensor elementwise(ElementwiseOp op, const Tensor& a, const std::optional<Tensor>& b) {
  const bool is_binary = op == ElementwiseOp::add || op == ElementwiseOp::sub || op == ElementwiseOp::mul;
  if (is_binary) {
    if (!b) throw std::invalid_argument("binary elementwise op needs a second operand");
    return binary(op, a, *b);
  }
  if (b) throw std::invalid_argument("unary elementwise op got a second operand");
  return unary(op, a);
}

Tensor add(const Tensor& a, const Tensor& b) { return binary(ElementwiseOp::add, a, b); }
Tensor sub(const Tensor& a, const Tensor& b) { return binary(ElementwiseOp::sub, a, b); }
Tensor mul(const Tensor& a, const Tensor& b) { return binary(ElementwiseOp::mul, a, b); }
Tensor sigmoid(const Tensor& a) { return unary(ElementwiseOp::sigmoid, a); }
Tensor tanh(const Tensor& a) { return unary(ElementwiseOp::tanh, a); }
Tensor relu(const Tensor& a) { return unary(ElementwiseOp::relu, a); }

Tensor scale(const Tensor& a, real factor) {
  auto av = a.data();
  std::vector<real> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] * factor;
  return detail::make_result(a.shape(), std::move(out), "scale", {a}, [factor](TensorImpl& self) {
    TensorImpl& pa = *self.parents[0];
    if (!pa.requires_grad) return;
    auto& ga = pa.ensure_grad();
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += self.grad[i] * factor;
  });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    throw ShapeError("matmul: dimension mismatch " + shape_to_string(a.shape()) + " x " +
                     shape_to_string(b.shape()));
  }
  const auto m = static_cast<Eigen::Index>(a.dim(0));
  const auto k = static_cast<Eigen::Index>(a.dim(1));
  const auto n = static_cast<Eigen::Index>(b.dim(1));
  // Row-by-row accumulation: each output row is computed the same way
  // wherever it sits in `a`, so relabeling rows permutes results bit-exactly.
  std::vector<real> out(static_cast<std::size_t>(m * n), real(0));
  const real* av = a.data().data();
  const real* bv = b.data().data();
  for (Eigen::Index i = 0; i < m; ++i) {
    real* o = out.data() + i * n;
    for (Eigen::Index p = 0; p < k; ++p) {
      const real x = av[i * k + p];
      const real* w = bv + p * n;
      for (Eigen::Index j = 0; j < n; ++j) o[j] += x * w[j];
    }
  }
  return detail::make_result({a.dim(0), b.dim(1)}, std::move(out), "matmul", {a, b},
                             [m, k, n](TensorImpl& self) {
    TensorImpl& pa = *self.parents[0];
    TensorImpl& pb = *self.parents[1];
    ConstMapMat dc(self.grad.data(), m, n);
    if (pa.requires_grad) {
      MapMat(pa.ensure_grad().data(), m, k).noalias() += dc * ConstMapMat(pb.data.data(), k, n).transpose();
    }
    if (pb.requires_grad) {
      MapMat(pb.ensure_grad().data(), k, n).noalias() += ConstMapMat(pa.data.data(), m, k).transpose() * dc;
    }
  });
}

namespace {

// Views a tensor as [outer, axis_extent, inner] around `axis`.
struct AxisView {
  std::size_t outer = 1;
  std::size_t extent = 1;
  std::size_t inner = 1;
};

AxisView axis_view(const Shape& shape, std::size_t axis) {
  AxisView v;
  for (std::size_t i = 0; i < axis; ++i) v.outer *= shape[i];
  v.extent = shape[axis];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) v.inner *= shape[i];
  return v;
}

}  // namespace

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis) {
  if (parts.empty()) throw std::invalid_argument("concat: no inputs");
  const Shape& first = parts.front().shape();
  if (axis >= first.size()) {
    throw ShapeError("concat: axis " + std::to_string(axis) + " out of range for " + shape_to_string(first));
  }
  Shape out_shape = first;
  out_shape[axis] = 0;
  for (const Tensor& p : parts) {
    const Shape& s = p.shape();
    bool ok = s.size() == first.size();
    for (std::size_t i = 0; ok && i < s.size(); ++i) ok = i == axis || s[i] == first[i];
    if (!ok) {
      throw ShapeError("concat: shape mismatch " + shape_to_string(first) + " vs " + shape_to_string(s) +
                       " along axis " + std::to_string(axis));
    }
    out_shape[axis] += s[axis];
  }
  const AxisView ov = axis_view(out_shape, axis);
  std::vector<real> out(shape_numel(out_shape));
  std::vector<std::size_t> offsets;
  std::size_t offset = 0;
  for (const Tensor& p : parts) {
    offsets.push_back(offset);
    const std::size_t run = p.dim(axis) * ov.inner;
    auto src = p.data();
    for (std::size_t o = 0; o < ov.outer; ++o) {
      std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(o * run), run,
                  out.begin() + static_cast<std::ptrdiff_t>(o * ov.extent * ov.inner + offset * ov.inner));
    }
    offset += p.dim(axis);
  }
  return detail::make_result(out_shape, std::move(out), "concat", parts, [ov, offsets](TensorImpl& self) {
    for (std::size_t pi = 0; pi < self.parents.size(); ++pi) {
      TensorImpl& p = *self.parents[pi];
      if (!p.requires_grad) continue;
      auto& g = p.ensure_grad();
      const std::size_t run = p.data.size() / ov.outer;
      for (std::size_t o = 0; o < ov.outer; ++o) {
        const real* src = self.grad.data() + o * ov.extent * ov.inner + offsets[pi] * ov.inner;
        real* dst = g.data() + o * run;
        for (std::size_t i = 0; i < run; ++i) dst[i] += src[i];
      }
    }
  });
}

Tensor concat(const Tensor& a, const Tensor& b, std::size_t axis) { return concat(std::vector<Tensor>{a, b}, axis); }

Tensor slice(const Tensor& a, std::size_t axis, std::size_t begin, std::size_t end) {
  if (axis >= a.rank()) {
    throw ShapeError("slice: axis " + std::to_string(axis) + " out of range for " + shape_to_string(a.shape()));
  }
  if (begin >= end || end > a.dim(axis)) {
    throw ShapeError("slice: invalid range [" + std::to_string(begin) + "," + std::to_string(end) +
                     ") on " + shape_to_string(a.shape()));
  }
  const AxisView iv = axis_view(a.shape(), axis);
  Shape out_shape = a.shape();
  out_shape[axis] = end - begin;
  const std::size_t run = (end - begin) * iv.inner;
  std::vector<real> out(iv.outer * run);
  auto src = a.data();
  for (std::size_t o = 0; o < iv.outer; ++o) {
    std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(o * iv.extent * iv.inner + begin * iv.inner), run,
                out.begin() + static_cast<std::ptrdiff_t>(o * run));
  }
  return detail::make_result(out_shape, std::move(out), "slice", {a}, [iv, begin, run](TensorImpl& self) {
    TensorImpl& p = *self.parents[0];
    if (!p.requires_grad) return;
    auto& g = p.ensure_grad();
    for (std::size_t o = 0; o < iv.outer; ++o) {
      real* dst = g.data() + o * iv.extent * iv.inner + begin * iv.inner;
      const real* s = self.grad.data() + o * run;
      for (std::size_t i = 0; i < run; ++i) dst[i] += s[i];
    }
  });
}

std::vector<Tensor> split(const Tensor& a, std::size_t axis, const std::vector<std::size_t>& sizes) {
  if (axis >= a.rank()) {
    throw ShapeError("split: axis " + std::to_string(axis) + " out of range for " + shape_to_string(a.shape()));
  }
  if (std::accumulate(sizes.begin(), sizes.end(), std::size_t{0}) != a.dim(axis)) {
    throw ShapeError("split: sizes do not cover axis of " + shape_to_string(a.shape()));
  }
  std::vector<Tensor> parts;
  std::size_t begin = 0;
  for (std::size_t s : sizes) {
    parts.push_back(slice(a, axis, begin, begin + s));
    begin += s;
  }
  return parts;
}

Tensor reduce(ReduceOp op, const Tensor& a, std::vector<std::size_t> axes) {
  if (axes.empty()) throw std::invalid_argument("reduce: empty reduction set");
  std::sort(axes.begin(), axes.end());
  axes.erase(std::unique(axes.begin(), axes.end()), axes.end());
  const Shape& in = a.shape();
  for (std::size_t ax : axes) {
    if (ax >= in.size()) {
      throw ShapeError("reduce: axis " + std::to_string(ax) + " out of range for " + shape_to_string(in));
    }
  }
  std::vector<bool> reduced(in.size(), false);
  for (std::size_t ax : axes) reduced[ax] = true;
  Shape out_shape;
  for (std::size_t i = 0; i < in.size(); ++i) {
    if (!reduced[i]) out_shape.push_back(in[i]);
  }
  // Map each input flat index to its output flat index.
  const std::size_t n = a.numel();
  std::vector<std::size_t> target(n);
  std::size_t count = 1;
  for (std::size_t ax : axes) count *= in[ax];
  {
    std::vector<std::size_t> idx(in.size(), 0);
    for (std::size_t flat = 0; flat < n; ++flat) {
      std::size_t t = 0;
      for (std::size_t d = 0; d < in.size(); ++d) {
        if (!reduced[d]) t = t * in[d] + idx[d];
      }
      target[flat] = t;
      for (std::size_t d = in.size(); d-- > 0;) {
        if (++idx[d] < in[d]) break;
        idx[d] = 0;
      }
    }
  }
  const std::size_t out_n = shape_numel(out_shape);
  auto av = a.data();
  std::vector<real> out(out_n, real(0));
  std::vector<std::size_t> argmax;
  const char* name = "reduce_sum";
  if (op == ReduceOp::max) {
    name = "reduce_max";
    argmax.assign(out_n, n);
    for (std::size_t flat = 0; flat < n; ++flat) {
      const std::size_t t = target[flat];
      // Strict comparison keeps the lowest flat index among ties.
      if (argmax[t] == n || av[flat] > av[argmax[t]]) argmax[t] = flat;
    }
    for (std::size_t t = 0; t < out_n; ++t) out[t] = av[argmax[t]];
  } else {
    for (std::size_t flat = 0; flat < n; ++flat) out[target[flat]] += av[flat];
    if (op == ReduceOp::mean) {
      name = "reduce_mean";
      for (real& v : out) v /= static_cast<real>(count);
    }
  }
  return detail::make_result(out_shape, std::move(out), name, {a},
                             [op, target = std::move(target), argmax = std::move(argmax), count](TensorImpl& self) {
    TensorImpl& p = *self.parents[0];
    if (!p.requires_grad) return;
    auto& g = p.ensure_grad();
    if (op == ReduceOp::max) {
      for (std::size_t t = 0; t < argmax.size(); ++t) g[argmax[t]] += self.grad[t];
      return;
    }
    const real factor = op == ReduceOp::mean ? real(1) / static_cast<real>(count) : real(1);
    for (std::size_t flat = 0; flat < g.size(); ++flat) g[flat] += self.grad[target[flat]] * factor;
  });
}

Tensor sum(const Tensor& a) {
  std::vector<std::size_t> axes(a.rank());
  std::iota(axes.begin(), axes.end(), 0);
  if (axes.empty()) return reshape(a, {});
  return reduce(ReduceOp::sum, a, axes);
}

Tensor mean(const Tensor& a) {
  std::vector<std::size_t> axes(a.rank());
  std::iota(axes.begin(), axes.end(), 0);
  if (axes.empty()) return reshape(a, {});
  return reduce(ReduceOp::mean, a, axes);
}

Tensor reshape(const Tensor& a, Shape shape) {
  if (shape_numel(shape) != a.numel()) {
    throw ShapeError("reshape: cannot view " + shape_to_string(a.shape()) + " as " + shape_to_string(shape));
  }
  for (std::size_t e : shape) {
    if (e == 0) throw ShapeError("reshape: zero extent in " + shape_to_string(shape));
  }
  std::vector<real> out(a.data().begin(), a.data().end());
  return detail::make_result(std::move(shape), std::move(out), "reshape", {a}, [](TensorImpl& self) {
    TensorImpl& p = *self.parents[0];
    if (!p.requires_grad) return;
    auto& g = p.ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
  });
}

Tensor gather_rows(const Tensor& a, std::span<const std::size_t> index) {
  require_rank2(a, "gather_rows");
  const std::size_t rows = a.dim(0);
  const std::size_t cols = a.dim(1);
  if (index.empty()) throw ShapeError("gather_rows: empty index");
  std::vector<real> out(index.size() * cols);
  auto av = a.data();
  for (std::size_t r = 0; r < index.size(); ++r) {
    if (index[r] >= rows) throw ShapeError("gather_rows: row index out of range");
    std::copy_n(av.begin() + static_cast<std::ptrdiff_t>(index[r] * cols), cols,
                out.begin() + static_cast<std::ptrdiff_t>(r * cols));
  }
  std::vector<std::size_t> idx(index.begin(), index.end());
  return detail::make_result({index.size(), cols}, std::move(out), "gather_rows", {a},
                             [idx = std::move(idx), cols](TensorImpl& self) {
    TensorImpl& p = *self.parents[0];
    if (!p.requires_grad) return;
    auto& g = p.ensure_grad();
    for (std::size_t r = 0; r < idx.size(); ++r) {
      real* dst = g.data() + idx[r] * cols;
      const real* src = self.grad.data() + r * cols;
      for (std::size_t c = 0; c < cols; ++c) dst[c] += src[c];
    }
  });
}

Tensor scatter_add_rows(const Tensor& a, std::span<const std::size_t> index, std::size_t rows) {
  require_rank2(a, "scatter_add_rows");
  if (index.size() != a.dim(0)) throw ShapeError("scatter_add_rows: index length does not match rows");
  const std::size_t cols = a.dim(1);
  std::vector<real> out(rows * cols, real(0));
  auto av = a.data();
  for (std::size_t r = 0; r < index.size(); ++r) {
    if (index[r] >= rows) throw ShapeError("scatter_add_rows: target row out of range");
    real* dst = out.data() + index[r] * cols;
    const real* src = av.data() + r * cols;
    for (std::size_t c = 0; c < cols; ++c) dst[c] += src[c];
  }
  std::vector<std::size_t> idx(index.begin(), index.end());
  return detail::make_result({rows, cols}, std::move(out), "scatter_add_rows", {a},
                             [idx = std::move(idx), cols](TensorImpl& self) {
    TensorImpl& p = *self.parents[0];
    if (!p.requires_grad) return;
    auto& g = p.ensure_grad();
    for (std::size_t r = 0; r < idx.size(); ++r) {
      const real* src = self.grad.data() + idx[r] * cols;
      real* dst = g.data() + r * cols;
      for (std::size_t c = 0; c < cols; ++c) dst[c] += src[c];
    }
  });
}

Tensor row_dot(const Tensor& a, const Tensor& b) {
  require_rank2(a, "row_dot");
  if (a.shape() != b.shape()) {
    throw ShapeError("row_dot: shape mismatch " + shape_to_string(a.shape()) + " vs " + shape_to_string(b.shape()));
  }
  const std::size_t rows = a.dim(0);
  const std::size_t cols = a.dim(1);
  auto av = a.data();
  auto bv = b.data();
  std::vector<real> out(rows, real(0));
  for (std::size_t r = 0; r < rows; ++r) {
    real acc = 0;
    for (std::size_t c = 0; c < cols; ++c) acc += av[r * cols + c] * bv[r * cols + c];
    out[r] = acc;
  }
  return detail::make_result({rows, 1}, std::move(out), "row_dot", {a, b}, [cols](TensorImpl& self) {
    TensorImpl& pa = *self.parents[0];
    TensorImpl& pb = *self.parents[1];
    const std::size_t rows = self.data.size();
    if (pa.requires_grad) {
      auto& g = pa.ensure_grad();
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) g[r * cols + c] += self.grad[r] * pb.data[r * cols + c];
    }
    if (pb.requires_grad) {
      auto& g = pb.ensure_grad();
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) g[r * cols + c] += self.grad[r] * pa.data[r * cols + c];
    }
  });
}

Tensor segment_softmax(const Tensor& scores, std::span<const std::size_t> segment, std::size_t segments) {
  if (scores.rank() != 2 || scores.dim(1) != 1 || segment.size() != scores.dim(0)) {
    throw ShapeError("segment_softmax: expects [m,1] scores with m segment ids, got " +
                     shape_to_string(scores.shape()));
  }
  auto s = scores.data();
  std::vector<real> peak(segments, -std::numeric_limits<real>::infinity());
  for (std::size_t r = 0; r < segment.size(); ++r) {
    if (segment[r] >= segments) throw ShapeError("segment_softmax: segment id out of range");
    peak[segment[r]] = std::max(peak[segment[r]], s[r]);
  }
  std::vector<real> total(segments, real(0));
  std::vector<real> out(s.size());
  for (std::size_t r = 0; r < s.size(); ++r) {
    out[r] = std::exp(s[r] - peak[segment[r]]);
    total[segment[r]] += out[r];
  }
  for (std::size_t r = 0; r < s.size(); ++r) out[r] /= total[segment[r]];
  std::vector<std::size_t> seg(segment.begin(), segment.end());
  return detail::make_result(scores.shape(), std::move(out), "segment_softmax", {scores},
                             [seg = std::move(seg), segments](TensorImpl& self) {
    TensorImpl& p = *self.parents[0];
    if (!p.requires_grad) return;
    auto& g = p.ensure_grad();
    std::vector<real> dot(segments, real(0));
    for (std::size_t r = 0; r < seg.size(); ++r) dot[seg[r]] += self.grad[r] * self.data[r];
    for (std::size_t r = 0; r < seg.size(); ++r) g[r] += self.data[r] * (self.grad[r] - dot[seg[r]]);
  });
}

SparseMap SparseMap::transposed() const {
  SparseMap t;
  t.out_rows = in_rows;
  t.in_rows = out_rows;
  t.row_begin.assign(in_rows + 1, 0);
  for (std::size_t c : column) ++t.row_begin[c + 1];
  for (std::size_t r = 0; r < in_rows; ++r) t.row_begin[r + 1] += t.row_begin[r];
  t.column.resize(column.size());
  t.weight.resize(weight.size());
  std::vector<std::size_t> fill(t.row_begin.begin(), t.row_begin.end() - 1);
  for (std::size_t r = 0; r < out_rows; ++r) {
    for (std::size_t e = row_begin[r]; e < row_begin[r + 1]; ++e) {
      const std::size_t slot = fill[column[e]]++;
      t.column[slot] = r;
      t.weight[slot] = weight[e];
    }
  }
  return t;
}

std::vector<double> SparseMap::to_dense() const {
  std::vector<double> dense(out_rows * in_rows, 0.0);
  for (std::size_t r = 0; r < out_rows; ++r) {
    for (std::size_t e = row_begin[r]; e < row_begin[r + 1]; ++e) dense[r * in_rows + column[e]] += weight[e];
  }
  return dense;
}

namespace {

void sparse_apply_into(const SparseMap& map, const real* x, real* y, std::size_t batch, std::size_t cols) {
  for (std::size_t b = 0; b < batch; ++b) {
    const real* xb = x + b * map.in_rows * cols;
    real* yb = y + b * map.out_rows * cols;
    for (std::size_t r = 0; r < map.out_rows; ++r) {
      real* dst = yb + r * cols;
      for (std::size_t e = map.row_begin[r]; e < map.row_begin[r + 1]; ++e) {
        const real w = static_cast<real>(map.weight[e]);
        const real* src = xb + map.column[e] * cols;
        for (std::size_t c = 0; c < cols; ++c) dst[c] += w * src[c];
      }
    }
  }
}

}  // namespace

Tensor apply_sparse(const SparseMap& map, const Tensor& x, std::size_t batch) {
  require_rank2(x, "apply_sparse");
  if (x.dim(0) != batch * map.in_rows) {
    throw ShapeError("apply_sparse: input " + shape_to_string(x.shape()) + " does not hold " +
                     std::to_string(batch) + " blocks of " + std::to_string(map.in_rows) + " rows");
  }
  const std::size_t cols = x.dim(1);
  std::vector<real> out(batch * map.out_rows * cols, real(0));
  sparse_apply_into(map, x.data().data(), out.data(), batch, cols);
  auto adjoint = std::make_shared<SparseMap>(map.transposed());
  return detail::make_result({batch * map.out_rows, cols}, std::move(out), "apply_sparse", {x},
                             [adjoint, batch, cols](TensorImpl& self) {
    TensorImpl& p = *self.parents[0];
    if (!p.requires_grad) return;
    sparse_apply_into(*adjoint, self.grad.data(), p.ensure_grad().data(), batch, cols);
  });
}

RSTG_NAMESPACE_END
