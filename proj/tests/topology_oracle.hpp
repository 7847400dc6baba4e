// Copyright 2026 The RSTG Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstdlib>
#include <utility>
#include <vector>

namespace rstg::test {

struct Cell {
  std::size_t g, r, c;
};

// Independent enumeration: same-scale grid neighbours plus any cross-scale
// pair whose regions overlap with positive area.
inline std::pair<std::size_t, std::size_t> brute_force(const std::vector<std::size_t>& scales, bool four, bool full) {
  std::vector<Cell> cells;
  for (std::size_t g : scales)
    for (std::size_t r = 0; r < g; ++r)
      for (std::size_t c = 0; c < g; ++c) cells.push_back({g, r, c});
  auto overlap_1d = [](std::size_t a, std::size_t ga, std::size_t b, std::size_t gb) {
    const std::size_t lo = std::max(a * gb, b * ga), hi = std::min((a + 1) * gb, (b + 1) * ga);
    return hi > lo;
  };
  std::size_t e = 0;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    for (std::size_t j = i + 1; j < cells.size(); ++j) {
      const Cell& a = cells[i];
      const Cell& b = cells[j];
      bool linked = full;
      if (!full && a.g == b.g) {
        const long dr = std::labs(static_cast<long>(a.r) - static_cast<long>(b.r));
        const long dc = std::labs(static_cast<long>(a.c) - static_cast<long>(b.c));
        linked = four ? dr + dc == 1 : std::max(dr, dc) == 1;
      }
      if (!full && a.g != b.g) linked = overlap_1d(a.r, a.g, b.r, b.g) && overlap_1d(a.c, a.g, b.c, b.g);
      e += linked;
    }
  }
  return {cells.size(), e};
}

inline std::vector<std::vector<std::size_t>> all_scale_lists() {
  std::vector<std::vector<std::size_t>> out;
  for (unsigned mask = 1; mask < 16; ++mask) {
    std::vector<std::size_t> s;
    for (std::size_t g = 1; g <= 4; ++g) {
      if (mask & (1u << (g - 1))) s.push_back(g);
    }
    out.push_back(s);
  }
  out.push_back({3, 1});
  out.push_back({4, 2, 3});
  return out;
}

}  // namespace rstg::test
