// Copyright 2026 The RSTG Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "rstg/feature_volume.hpp"
#include "rstg/gradcheck.hpp"
#include "rstg/rstg_model.hpp"

RSTG_NAMESPACE_BEGIN

/// Tiny end-to-end configuration: T=3, K=2, scales [1,2], D=8, C=4, batch 2.
struct TinySetup {
  std::size_t time = 3, iterations = 2, dim = 8, channels = 4, batch = 2, height = 4, width = 4;
  std::vector<std::size_t> scales{1, 2};
};

/// Random feature volume with values in [-1, 1].
FeatureVolume random_volume(std::size_t batch, std::size_t time, std::size_t height, std::size_t width,
                            std::size_t channels, std::uint64_t seed);

/// RSTG variants: all-temp, 1-temp, space-only, time-only, homogeneous,
/// positional-all-temp, to-map, full-adjacency, scale-specific, softmax-attention.
/// Baselines: mean-lstm, conv-lstm, backbone-mean-lstm (through a tiny conv backbone).
std::vector<std::string> gradcheck_targets();

RstgConfig tiny_rstg_config(const std::string& target, const TinySetup& setup = {});

struct GradcheckCase {
  std::string target;
  GradCheckReport report;
  double seconds = 0;
  std::size_t parameters = 0;
};

GradcheckCase run_gradcheck_case(const std::string& target, std::uint64_t seed, const GradCheckOptions& options = {},
                                 const TinySetup& setup = {});

RSTG_NAMESPACE_END
