// Copyright 2026 The RSTG Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

namespace rstg::acceptance {

struct Verdict {
  int id = 0;
  std::string title;
  bool pass = false;
  std::string detail;
};

// Checks that run on the 64-bit engine.
Verdict gradient_correctness();
Verdict complexity_identity();
Verdict topology_oracle();
Verdict aggregation_contracts();
Verdict invariance_suite();

}  // namespace rstg::acceptance
