// Copyright 2026 The RSTG Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "rstg/topology.hpp"
#include "test_util.hpp"
#include "topology_oracle.hpp"

namespace rstg {
namespace {

using test::all_scale_lists;
using test::brute_force;

TEST(Topology, MatchesBruteForceForAllSmallScaleLists) {
  for (const auto& scales : all_scale_lists()) {
    for (bool four : {false, true}) {
      for (bool full : {false, true}) {
        const GraphTopology t = build_topology(
            scales, {full ? AdjacencyMode::full : AdjacencyMode::sparse, four ? Connectivity::four : Connectivity::eight});
        const auto [n, e] = brute_force(scales, four, full);
        EXPECT_EQ(t.num_nodes(), n);
        EXPECT_EQ(edge_count(t), e) << "scales size " << scales.size() << " four " << four << " full " << full;
      }
    }
  }
}

TEST(Topology, KnownCounts) {
  EXPECT_EQ(edge_count(build_topology({1, 2, 3})), 55u);
  EXPECT_EQ(build_topology({1, 2, 3}).num_nodes(), 14u);
  EXPECT_EQ(edge_count(build_topology({1, 2})), 10u);
  EXPECT_EQ(edge_count(build_topology({1})), 0u);
  EXPECT_EQ(edge_count(build_topology({1, 2, 3}, {AdjacencyMode::full})), 91u);
}

TEST(Topology, EdgeInvariants) {
  for (const auto& scales : all_scale_lists()) {
    for (auto mode : {AdjacencyMode::sparse, AdjacencyMode::full}) {
      const GraphTopology t = build_topology(scales, {mode});
      std::set<std::pair<std::size_t, std::size_t>> edges(t.edges.begin(), t.edges.end());
      EXPECT_EQ(edges.size(), t.edges.size());
      EXPECT_TRUE(std::is_sorted(t.edges.begin(), t.edges.end()));
      for (const auto& [j, i] : t.edges) {
        EXPECT_NE(j, i);
        EXPECT_TRUE(edges.count({i, j}));
      }
      if (mode == AdjacencyMode::full) {
        EXPECT_EQ(t.edges.size(), t.num_nodes() * (t.num_nodes() - 1));
      }
    }
  }
}

TEST(Topology, RegionsTileTheUnitSquare) {
  const GraphTopology t = build_topology({1, 2, 3, 4});
  for (std::size_t s = 0; s < t.scales.size(); ++s) {
    const double g = static_cast<double>(t.scales[s]);
    double area = 0;
    for (const NodeRegion& n : t.nodes) {
      if (n.scale_index != s) continue;
      EXPECT_NEAR(n.region.area(), 1.0 / (g * g), 1e-15);
      area += n.region.area();
      for (const NodeRegion& m : t.nodes) {
        if (m.scale_index == s && (m.row != n.row || m.col != n.col)) {
          EXPECT_FALSE(regions_intersect(n, m));
        }
      }
    }
    EXPECT_NEAR(area, 1.0, 1e-12);
  }
}

TEST(Topology, PositionalMapsAreSmoothedOccupancy) {
  const GraphTopology t = build_topology({1, 2, 3, 4});
  for (std::size_t i = 0; i < t.num_nodes(); ++i) {
    const NodeRegion& n = t.nodes[i];
    // Occupancy: cell centre (c + 1/2)/6 inside [r/g, (r+1)/g) on both axes.
    auto inside = [&](std::size_t cell, std::size_t r) {
      const double centre = (static_cast<double>(cell) + 0.5) / 6.0;
      return centre >= static_cast<double>(r) / static_cast<double>(n.grid) &&
             centre < static_cast<double>(r + 1) / static_cast<double>(n.grid);
    };
    std::array<double, 36> occ{};
    bool any = false;
    for (std::size_t y = 0; y < 6; ++y)
      for (std::size_t x = 0; x < 6; ++x) {
        occ[y * 6 + x] = inside(y, n.row) && inside(x, n.col) ? 1.0 : 0.0;
        any = any || occ[y * 6 + x] > 0;
      }
    ASSERT_TRUE(any);
    const PositionalMap& m = t.positional_maps[i];
    for (std::size_t y = 0; y < 6; ++y)
      for (std::size_t x = 0; x < 6; ++x) {
        double num = 0, den = 0;
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            const int yy = static_cast<int>(y) + dy, xx = static_cast<int>(x) + dx;
            if (yy < 0 || xx < 0 || yy >= 6 || xx >= 6) continue;
            const double w = std::exp(-0.5 * (dx * dx + dy * dy));
            num += w * occ[static_cast<std::size_t>(yy * 6 + xx)];
            den += w;
          }
        EXPECT_NEAR(m[y * 6 + x], num / den, 1e-12);
        EXPECT_GE(m[y * 6 + x], 0.0);
        EXPECT_LE(m[y * 6 + x], 1.0 + 1e-12);
      }
    EXPECT_GT(*std::max_element(m.begin(), m.end()), 0.0);
  }
  for (double v : t.positional_maps[0]) EXPECT_NEAR(v, 1.0, 1e-12);
}

TEST(Topology, PermutationRelabelsEdges) {
  const GraphTopology t = build_topology({1, 2});
  const std::vector<std::size_t> order{3, 0, 4, 2, 1};
  const GraphTopology p = t.permuted(order);
  std::set<std::pair<std::size_t, std::size_t>> expected;
  std::vector<std::size_t> new_index(5);
  for (std::size_t k = 0; k < 5; ++k) new_index[order[k]] = k;
  for (const auto& [j, i] : t.edges) expected.insert({new_index[j], new_index[i]});
  const std::set<std::pair<std::size_t, std::size_t>> actual(p.edges.begin(), p.edges.end());
  EXPECT_EQ(actual, expected);
  for (std::size_t k = 0; k < 5; ++k) EXPECT_EQ(p.nodes[k].row, t.nodes[order[k]].row);
  EXPECT_THROW(t.permuted(std::vector<std::size_t>{0, 0, 1, 2, 3}), std::invalid_argument);
}

TEST(Topology, RejectsBadInput) {
  EXPECT_THROW(build_topology({}), std::invalid_argument);
  EXPECT_THROW(build_topology({0, 2}), std::invalid_argument);
  EXPECT_THROW(parse_adjacency("dense"), std::invalid_argument);
  EXPECT_EQ(parse_connectivity("4"), Connectivity::four);
  const auto j = build_topology({1, 2}).to_json();
  EXPECT_EQ(j.at("nodes").size(), 5u);
}

// Pool weights from supersampling: 60 sub-pixels per pixel edge land exactly on
// every region boundary c*L/g for L <= 6 and g <= 4.
double supersampled_weight(const NodeRegion& n, std::size_t y, std::size_t x, std::size_t h, std::size_t w) {
  constexpr int kSub = 60;
  int hits = 0;
  for (int sy = 0; sy < kSub; ++sy)
    for (int sx = 0; sx < kSub; ++sx) {
      const double py = (static_cast<double>(y) + (sy + 0.5) / kSub) / static_cast<double>(h);
      const double px = (static_cast<double>(x) + (sx + 0.5) / kSub) / static_cast<double>(w);
      hits += py >= n.region.top && py < n.region.bottom && px >= n.region.left && px < n.region.right;
    }
  return static_cast<double>(hits) / (kSub * kSub);
}

TEST(RegionMaps, PoolingIsAreaWeightedAverage) {
  for (std::size_t size : {4, 5, 6}) {
    const GraphTopology t = build_topology({1, 2, 3, 4});
    const RegionMaps maps = build_region_maps(t, size, size);
    const auto dense = maps.pool.to_dense();
    for (std::size_t i = 0; i < t.num_nodes(); ++i) {
      double row = 0, norm = 0;
      for (std::size_t p = 0; p < size * size; ++p) norm += supersampled_weight(t.nodes[i], p / size, p % size, size, size);
      for (std::size_t p = 0; p < size * size; ++p) {
        const double expected = supersampled_weight(t.nodes[i], p / size, p % size, size, size) / norm;
        EXPECT_NEAR(dense[i * size * size + p], expected, 1e-12);
        row += dense[i * size * size + p];
      }
      EXPECT_NEAR(row, 1.0, 1e-12);
    }
  }
}

TEST(RegionMaps, CoarsestNodeIsGlobalAveragePoolProjected) {
  const GraphTopology t = build_topology({1, 2, 3});
  const std::size_t B = 2, H = 5, W = 5, C = 3, D = 4;
  const RegionMaps maps = build_region_maps(t, H, W);
  const Tensor frame = test::random_tensor({B * H * W, C}, 1);
  const Tensor w = test::random_tensor({C, D}, 2);
  const Tensor nodes = pool_to_nodes(frame, maps, B, w);
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t d = 0; d < D; ++d) {
      double expected = 0;
      for (std::size_t p = 0; p < H * W; ++p)
        for (std::size_t c = 0; c < C; ++c) expected += frame.at({b * H * W + p, c}) * w.at({c, d});
      EXPECT_NEAR(nodes.at({b * t.num_nodes(), d}), expected / (H * W), 1e-12);
    }
  }
}

TEST(RegionMaps, NearestUnpoolCopiesEachScaleOnce) {
  const GraphTopology t = build_topology({1, 2, 3});
  const RegionMaps maps = build_region_maps(t, 6, 6);
  const auto dense = maps.unpool.to_dense();
  for (std::size_t p = 0; p < 36; ++p) {
    double total = 0;
    for (std::size_t i = 0; i < t.num_nodes(); ++i) {
      const double v = dense[p * t.num_nodes() + i];
      const NodeRegion& n = t.nodes[i];
      const bool covers = p / 6 / (6 / n.grid) == n.row && p % 6 / (6 / n.grid) == n.col;
      EXPECT_EQ(v, covers ? 1.0 : 0.0);
      total += v;
    }
    EXPECT_EQ(total, 3.0);
  }
}

TEST(RegionMaps, PoolAndUnpoolAdjointDotProduct) {
  const GraphTopology t = build_topology({1, 2, 3});
  for (auto up : {Upsampling::nearest, Upsampling::bilinear}) {
    const RegionMaps maps = build_region_maps(t, 5, 7, up);
    const Tensor eye({3, 3}, std::vector<real>{1, 0, 0, 0, 1, 0, 0, 0, 1});
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      Tensor x = test::random_tensor({2 * 35, 3}, seed, true);
      Tensor px = pool_to_nodes(x, maps, 2, eye);
      Tensor y = test::random_tensor(px.shape(), seed + 10);
      backward(sum(mul(px, y)));
      EXPECT_NEAR(test::dot(px.data(), y.data()), test::dot(x.data(), x.grad()), 1e-10);

      Tensor n = test::random_tensor({2 * t.num_nodes(), 3}, seed + 20, true);
      Tensor un = unpool_from_nodes(n, maps, 2);
      Tensor z = test::random_tensor(un.shape(), seed + 30);
      backward(sum(mul(un, z)));
      EXPECT_NEAR(test::dot(un.data(), z.data()), test::dot(n.data(), n.grad()), 1e-10);
    }
  }
}

TEST(RegionMaps, PermutedTopologyPermutesPooledRows) {
  const GraphTopology t = build_topology({1, 2});
  const std::vector<std::size_t> order{4, 2, 0, 1, 3};
  const GraphTopology p = t.permuted(order);
  const Tensor frame = test::random_tensor({16, 2}, 3);
  const Tensor eye({2, 2}, std::vector<real>{1, 0, 0, 1});
  const Tensor a = pool_to_nodes(frame, build_region_maps(t, 4, 4), 1, eye);
  const Tensor b = pool_to_nodes(frame, build_region_maps(p, 4, 4), 1, eye);
  for (std::size_t k = 0; k < 5; ++k) {
    for (std::size_t c = 0; c < 2; ++c) EXPECT_EQ(b.at({k, c}), a.at({order[k], c}));
  }
}

TEST(RegionMaps, RejectsMapsSmallerThanAGrid) {
  EXPECT_THROW(build_region_maps(build_topology({1, 4}), 3, 8), ShapeError);
}

}  // namespace
}  // namespace rstg
