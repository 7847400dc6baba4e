// Copyright 2026 The RSTG Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "rstg/tensor.hpp"

RSTG_NAMESPACE_BEGIN

/// B x T x H x W x C activations stored as one [B*H*W, C] tensor per time step
/// (rows ordered b, y, x).
struct FeatureVolume {
  std::size_t batch = 0, time = 0, height = 0, width = 0, channels = 0;
  std::vector<Tensor> frames;

  Shape shape() const { return {batch, time, height, width, channels}; }
  void validate() const;
};

RSTG_NAMESPACE_END
