// Copyright 2026 The RSTG Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <span>

#include "rstg/tensor.hpp"

RSTG_NAMESPACE_BEGIN

/// Same-padded, stride-1 cross-correlation.
/// x: [B,H,W,Cin], kernel: [KH,KW,Cin,Cout] with odd KH/KW, bias: [Cout].
Tensor conv2d(const Tensor& x, const Tensor& kernel, const std::optional<Tensor>& bias = std::nullopt);

/// Non-overlapping window max pooling on [B,H,W,C]. Trailing rows/columns
/// that do not fill a window are dropped. Ties go to the first element in
/// row-major window order.
Tensor max_pool2d(const Tensor& x, std::size_t window = 2);

/// Per-channel normalization over all leading axes of x (last axis = channels).
/// In training mode the batch statistics are used and the running buffers are
/// blended as running = momentum * running + (1 - momentum) * batch.
Tensor batch_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, Tensor& running_mean,
                  Tensor& running_var, bool training, real momentum = real(0.9), real eps = real(1e-5));

/// Mean softmax cross-entropy of [B,K] logits against integer labels.
Tensor cross_entropy(const Tensor& logits, std::span<const int> labels);

RSTG_NAMESPACE_END
