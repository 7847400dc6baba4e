// Copyright 2026 The RSTG Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace rstg::cli {

struct GradcheckArgs {
  std::vector<std::string> targets;  // empty: all
  std::uint64_t seed = 0;
  double tolerance = 1e-4;
  double step = 1e-5;
  std::size_t seeds = 1;
  std::filesystem::path out;
};

/// Runs the 64-bit gradient checks; returns the process exit code.
int run_gradcheck(const GradcheckArgs& args);

}  // namespace rstg::cli
