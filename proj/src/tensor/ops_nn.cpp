// Copyright 2026 The RSTG Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <string>

#include "rstg/nn_ops.hpp"

RSTG_NAMESPACE_BEGIN

namespace {

using RowMat = Eigen::Matrix<real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using ConstMapMat = Eigen::Map<const RowMat>;

struct ConvGeometry {
  std::size_t batch, height, width, in_ch, out_ch, kh, kw;
  std::size_t rows() const { return batch * height * width; }
  std::size_t patch() const { return kh * kw * in_ch; }
};

// Patch matrix [B*H*W, KH*KW*Cin] with zero padding.
void im2col(const ConvGeometry& g, const real* x, real* cols) {
  const auto ph = static_cast<std::ptrdiff_t>(g.kh / 2);
  const auto pw = static_cast<std::ptrdiff_t>(g.kw / 2);
  const auto H = static_cast<std::ptrdiff_t>(g.height);
  const auto W = static_cast<std::ptrdiff_t>(g.width);
  std::size_t row = 0;
  for (std::size_t b = 0; b < g.batch; ++b) {
    const real* xb = x + b * g.height * g.width * g.in_ch;
    for (std::ptrdiff_t y = 0; y < H; ++y) {
      for (std::ptrdiff_t xx = 0; xx < W; ++xx, ++row) {
        real* dst = cols + row * g.patch();
        for (std::size_t ky = 0; ky < g.kh; ++ky) {
          const std::ptrdiff_t sy = y + static_cast<std::ptrdiff_t>(ky) - ph;
          for (std::size_t kx = 0; kx < g.kw; ++kx, dst += g.in_ch) {
            const std::ptrdiff_t sx = xx + static_cast<std::ptrdiff_t>(kx) - pw;
            if (sy < 0 || sy >= H || sx < 0 || sx >= W) {
              std::fill_n(dst, g.in_ch, real(0));
            } else {
              std::copy_n(xb + (static_cast<std::size_t>(sy) * g.width + static_cast<std::size_t>(sx)) * g.in_ch,
                          g.in_ch, dst);
            }
          }
        }
      }
    }
  }
}

void col2im_add(const ConvGeometry& g, const real* cols, real* dx) {
  const auto ph = static_cast<std::ptrdiff_t>(g.kh / 2);
  const auto pw = static_cast<std::ptrdiff_t>(g.kw / 2);
  const auto H = static_cast<std::ptrdiff_t>(g.height);
  const auto W = static_cast<std::ptrdiff_t>(g.width);
  std::size_t row = 0;
  for (std::size_t b = 0; b < g.batch; ++b) {
    real* db = dx + b * g.height * g.width * g.in_ch;
    for (std::ptrdiff_t y = 0; y < H; ++y) {
      for (std::ptrdiff_t xx = 0; xx < W; ++xx, ++row) {
        const real* src = cols + row * g.patch();
        for (std::size_t ky = 0; ky < g.kh; ++ky) {
          const std::ptrdiff_t sy = y + static_cast<std::ptrdiff_t>(ky) - ph;
          for (std::size_t kx = 0; kx < g.kw; ++kx, src += g.in_ch) {
            const std::ptrdiff_t sx = xx + static_cast<std::ptrdiff_t>(kx) - pw;
            if (sy < 0 || sy >= H || sx < 0 || sx >= W) continue;
            real* dst = db + (static_cast<std::size_t>(sy) * g.width + static_cast<std::size_t>(sx)) * g.in_ch;
            for (std::size_t c = 0; c < g.in_ch; ++c) dst[c] += src[c];
          }
        }
      }
    }
  }
}

}  // namespace

Tensor conv2d(const Tensor& x, const Tensor& kernel, const std::optional<Tensor>& bias) {
  if (x.rank() != 4 || kernel.rank() != 4) {
    throw ShapeError("conv2d: expects x [B,H,W,C] and kernel [KH,KW,Cin,Cout], got " +
                     shape_to_string(x.shape()) + " and " + shape_to_string(kernel.shape()));
  }
  if (kernel.dim(2) != x.dim(3)) {
    throw ShapeError("conv2d: channel mismatch, input " + shape_to_string(x.shape()) + " vs kernel " +
                     shape_to_string(kernel.shape()));
  }
  if (kernel.dim(0) % 2 == 0 || kernel.dim(1) % 2 == 0) {
    throw ShapeError("conv2d: kernel extents must be odd, got " + shape_to_string(kernel.shape()));
  }
  if (bias && (bias->rank() != 1 || bias->dim(0) != kernel.dim(3))) {
    throw ShapeError("conv2d: bias " + shape_to_string(bias->shape()) + " does not match kernel " +
                     shape_to_string(kernel.shape()));
  }
  const ConvGeometry g{x.dim(0), x.dim(1), x.dim(2), x.dim(3), kernel.dim(3), kernel.dim(0), kernel.dim(1)};
  auto cols = std::make_shared<std::vector<real>>(g.rows() * g.patch());
  im2col(g, x.data().data(), cols->data());
  const auto rows = static_cast<Eigen::Index>(g.rows());
  const auto patch = static_cast<Eigen::Index>(g.patch());
  const auto oc = static_cast<Eigen::Index>(g.out_ch);
  std::vector<real> out(g.rows() * g.out_ch);
  MapMat y(out.data(), rows, oc);
  y.noalias() = ConstMapMat(cols->data(), rows, patch) * ConstMapMat(kernel.data().data(), patch, oc);
  if (bias) {
    auto bv = bias->data();
    for (std::size_t r = 0; r < g.rows(); ++r)
      for (std::size_t c = 0; c < g.out_ch; ++c) out[r * g.out_ch + c] += bv[c];
  }
  std::vector<Tensor> parents{x, kernel};
  if (bias) parents.push_back(*bias);
  const bool keep_cols = kernel.requires_grad();
  if (!keep_cols) cols.reset();
  return detail::make_result({g.batch, g.height, g.width, g.out_ch}, std::move(out), "conv2d", std::move(parents),
                             [g, cols](TensorImpl& self) {
    const auto rows = static_cast<Eigen::Index>(g.rows());
    const auto patch = static_cast<Eigen::Index>(g.patch());
    const auto oc = static_cast<Eigen::Index>(g.out_ch);
    ConstMapMat dy(self.grad.data(), rows, oc);
    TensorImpl& px = *self.parents[0];
    TensorImpl& pk = *self.parents[1];
    if (pk.requires_grad) {
      MapMat(pk.ensure_grad().data(), patch, oc).noalias() +=
          ConstMapMat(cols->data(), rows, patch).transpose() * dy;
    }
    if (self.parents.size() > 2 && self.parents[2]->requires_grad) {
      auto& gb = self.parents[2]->ensure_grad();
      for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t c = 0; c < g.out_ch; ++c) gb[c] += self.grad[r * g.out_ch + c];
    }
    if (px.requires_grad) {
      std::vector<real> dcols(g.rows() * g.patch());
      MapMat(dcols.data(), rows, patch).noalias() = dy * ConstMapMat(pk.data.data(), patch, oc).transpose();
      col2im_add(g, dcols.data(), px.ensure_grad().data());
    }
  });
}

Tensor max_pool2d(const Tensor& x, std::size_t window) {
  if (x.rank() != 4) throw ShapeError("max_pool2d: expects [B,H,W,C], got " + shape_to_string(x.shape()));
  if (window == 0 || x.dim(1) < window || x.dim(2) < window) {
    throw ShapeError("max_pool2d: window " + std::to_string(window) + " too large for " + shape_to_string(x.shape()));
  }
  const std::size_t B = x.dim(0), H = x.dim(1), W = x.dim(2), C = x.dim(3);
  const std::size_t OH = H / window, OW = W / window;
  std::vector<real> out(B * OH * OW * C);
  std::vector<std::size_t> source(out.size());
  auto xv = x.data();
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t oy = 0; oy < OH; ++oy) {
      for (std::size_t ox = 0; ox < OW; ++ox) {
        for (std::size_t c = 0; c < C; ++c) {
          std::size_t best = ((b * H + oy * window) * W + ox * window) * C + c;
          for (std::size_t dy = 0; dy < window; ++dy) {
            for (std::size_t dx = 0; dx < window; ++dx) {
              const std::size_t i = ((b * H + oy * window + dy) * W + ox * window + dx) * C + c;
              if (xv[i] > xv[best]) best = i;
            }
          }
          const std::size_t o = ((b * OH + oy) * OW + ox) * C + c;
          out[o] = xv[best];
          source[o] = best;
        }
      }
    }
  }
  return detail::make_result({B, OH, OW, C}, std::move(out), "max_pool2d", {x},
                             [source = std::move(source)](TensorImpl& self) {
    TensorImpl& p = *self.parents[0];
    if (!p.requires_grad) return;
    auto& g = p.ensure_grad();
    for (std::size_t o = 0; o < source.size(); ++o) g[source[o]] += self.grad[o];
  });
}

Tensor batch_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, Tensor& running_mean,
                  Tensor& running_var, bool training, real momentum, real eps) {
  if (x.rank() < 2) throw ShapeError("batch_norm: expects at least rank 2, got " + shape_to_string(x.shape()));
  const std::size_t C = x.shape().back();
  const std::size_t M = x.numel() / C;
  for (const Tensor* t : std::initializer_list<const Tensor*>{&gamma, &beta, &running_mean, &running_var}) {
    if (t->rank() != 1 || t->dim(0) != C) {
      throw ShapeError("batch_norm: per-channel tensor " + shape_to_string(t->shape()) + " does not match " +
                       shape_to_string(x.shape()));
    }
  }
  if (training && M < 2) throw ShapeError("batch_norm: training mode needs at least two rows per channel");
  auto xv = x.data();
  std::vector<real> mu(C, real(0)), var(C, real(0));
  if (training) {
    for (std::size_t r = 0; r < M; ++r)
      for (std::size_t c = 0; c < C; ++c) mu[c] += xv[r * C + c];
    for (real& m : mu) m /= static_cast<real>(M);
    for (std::size_t r = 0; r < M; ++r)
      for (std::size_t c = 0; c < C; ++c) {
        const real d = xv[r * C + c] - mu[c];
        var[c] += d * d;
      }
    for (real& v : var) v /= static_cast<real>(M);
    auto rm = running_mean.mutable_data();
    auto rv = running_var.mutable_data();
    const real unbias = static_cast<real>(M) / static_cast<real>(M - 1);
    for (std::size_t c = 0; c < C; ++c) {
      rm[c] = momentum * rm[c] + (real(1) - momentum) * mu[c];
      rv[c] = momentum * rv[c] + (real(1) - momentum) * var[c] * unbias;
    }
  } else {
    std::copy(running_mean.data().begin(), running_mean.data().end(), mu.begin());
    std::copy(running_var.data().begin(), running_var.data().end(), var.begin());
  }
  std::vector<real> inv_std(C);
  for (std::size_t c = 0; c < C; ++c) inv_std[c] = real(1) / std::sqrt(var[c] + eps);
  auto gv = gamma.data();
  auto bv = beta.data();
  auto xhat = std::make_shared<std::vector<real>>(x.numel());
  std::vector<real> out(x.numel());
  for (std::size_t r = 0; r < M; ++r) {
    for (std::size_t c = 0; c < C; ++c) {
      const std::size_t i = r * C + c;
      (*xhat)[i] = (xv[i] - mu[c]) * inv_std[c];
      out[i] = gv[c] * (*xhat)[i] + bv[c];
    }
  }
  return detail::make_result(x.shape(), std::move(out), "batch_norm", {x, gamma, beta},
                             [xhat, inv_std, training, C, M](TensorImpl& self) {
    TensorImpl& px = *self.parents[0];
    TensorImpl& pg = *self.parents[1];
    TensorImpl& pb = *self.parents[2];
    const auto& dy = self.grad;
    std::vector<real> sum_dy(C, real(0)), sum_dy_xhat(C, real(0));
    for (std::size_t r = 0; r < M; ++r)
      for (std::size_t c = 0; c < C; ++c) {
        sum_dy[c] += dy[r * C + c];
        sum_dy_xhat[c] += dy[r * C + c] * (*xhat)[r * C + c];
      }
    if (pg.requires_grad) {
      auto& g = pg.ensure_grad();
      for (std::size_t c = 0; c < C; ++c) g[c] += sum_dy_xhat[c];
    }
    if (pb.requires_grad) {
      auto& g = pb.ensure_grad();
      for (std::size_t c = 0; c < C; ++c) g[c] += sum_dy[c];
    }
    if (!px.requires_grad) return;
    auto& gx = px.ensure_grad();
    const auto& gamma = pg.data;
    if (training) {
      const real inv_m = real(1) / static_cast<real>(M);
      for (std::size_t r = 0; r < M; ++r)
        for (std::size_t c = 0; c < C; ++c) {
          const std::size_t i = r * C + c;
          gx[i] += gamma[c] * inv_std[c] * inv_m *
                   (static_cast<real>(M) * dy[i] - sum_dy[c] - (*xhat)[i] * sum_dy_xhat[c]);
        }
    } else {
      for (std::size_t r = 0; r < M; ++r)
        for (std::size_t c = 0; c < C; ++c) gx[r * C + c] += dy[r * C + c] * gamma[c] * inv_std[c];
    }
  });
}

Tensor cross_entropy(const Tensor& logits, std::span<const int> labels) {
  if (logits.rank() != 2 || logits.dim(0) != labels.size()) {
    throw ShapeError("cross_entropy: logits " + shape_to_string(logits.shape()) + " vs " +
                     std::to_string(labels.size()) + " labels");
  }
  const std::size_t B = logits.dim(0), K = logits.dim(1);
  auto lv = logits.data();
  auto probs = std::make_shared<std::vector<real>>(B * K);
  real loss = 0;
  for (std::size_t b = 0; b < B; ++b) {
    if (labels[b] < 0 || static_cast<std::size_t>(labels[b]) >= K) {
      throw std::out_of_range("cross_entropy: label " + std::to_string(labels[b]) + " outside [0," +
                              std::to_string(K) + ")");
    }
    const real* row = lv.data() + b * K;
    const real peak = *std::max_element(row, row + K);
    real total = 0;
    for (std::size_t k = 0; k < K; ++k) {
      (*probs)[b * K + k] = std::exp(row[k] - peak);
      total += (*probs)[b * K + k];
    }
    for (std::size_t k = 0; k < K; ++k) (*probs)[b * K + k] /= total;
    loss += std::log(total) + peak - row[labels[b]];
  }
  loss /= static_cast<real>(B);
  std::vector<int> targets(labels.begin(), labels.end());
  return detail::make_result({}, {loss}, "cross_entropy", {logits},
                             [probs, targets = std::move(targets), B, K](TensorImpl& self) {
    TensorImpl& p = *self.parents[0];
    if (!p.requires_grad) return;
    auto& g = p.ensure_grad();
    const real scale = self.grad[0] / static_cast<real>(B);
    for (std::size_t b = 0; b < B; ++b) {
      for (std::size_t k = 0; k < K; ++k) {
        const real onehot = static_cast<std::size_t>(targets[b]) == k ? real(1) : real(0);
        g[b * K + k] += scale * ((*probs)[b * K + k] - onehot);
      }
    }
  });
}

RSTG_NAMESPACE_END
