// Copyright 2026 The RSTG Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>
#include <stdexcept>

#include "rstg/topology.hpp"

RSTG_NAMESPACE_BEGIN

namespace {

// Overlap of pixel [p, p+1) with the span [r*L/g, (r+1)*L/g).
double overlap(std::size_t p, std::size_t r, std::size_t g, std::size_t length) {
  const double lo = static_cast<double>(r * length) / static_cast<double>(g);
  const double hi = static_cast<double>((r + 1) * length) / static_cast<double>(g);
  return std::max(0.0, std::min(static_cast<double>(p + 1), hi) - std::max(static_cast<double>(p), lo));
}

// 1-D interpolation taps for output pixel p of `length` from a grid of g cells.
std::vector<std::pair<std::size_t, double>> taps(std::size_t p, std::size_t g, std::size_t length, Upsampling mode) {
  if (mode == Upsampling::nearest) {
    // Cell containing the pixel center.
    return {{std::min(g - 1, ((2 * p + 1) * g) / (2 * length)), 1.0}};
  }
  double s = (static_cast<double>(p) + 0.5) * static_cast<double>(g) / static_cast<double>(length) - 0.5;
  s = std::clamp(s, 0.0, static_cast<double>(g - 1));
  const auto lo = static_cast<std::size_t>(std::floor(s));
  const std::size_t hi = std::min(g - 1, lo + 1);
  const double f = s - static_cast<double>(lo);
  if (hi == lo || f == 0.0) return {{lo, 1.0}};
  return {{lo, 1.0 - f}, {hi, f}};
}

SparseMap from_rows(std::size_t in_rows, const std::vector<std::map<std::size_t, double>>& rows) {
  SparseMap m;
  m.out_rows = rows.size();
  m.in_rows = in_rows;
  m.row_begin.push_back(0);
  for (const auto& row : rows) {
    for (const auto& [col, w] : row) {
      m.column.push_back(col);
      m.weight.push_back(w);
    }
    m.row_begin.push_back(m.column.size());
  }
  return m;
}

}  // namespace

RegionMaps build_region_maps(const GraphTopology& topology, std::size_t height, std::size_t width,
                             Upsampling upsampling) {
  for (std::size_t g : topology.scales) {
    if (height < g || width < g) {
      throw ShapeError("feature map " + std::to_string(height) + "x" + std::to_string(width) +
                       " is smaller than a " + std::to_string(g) + "x" + std::to_string(g) + " grid");
    }
  }
  RegionMaps maps;
  maps.height = height;
  maps.width = width;
  maps.nodes = topology.num_nodes();

  std::vector<std::map<std::size_t, double>> pool_rows(maps.nodes);
  std::vector<std::map<std::size_t, double>> unpool_rows(height * width);
  // Node lookup by (scale, row, col) so permuted topologies work too.
  std::map<std::tuple<std::size_t, std::size_t, std::size_t>, std::size_t> index;
  for (std::size_t i = 0; i < maps.nodes; ++i) {
    const NodeRegion& n = topology.nodes[i];
    index[{n.scale_index, n.row, n.col}] = i;
    const double area = static_cast<double>(height * width) / static_cast<double>(n.grid * n.grid);
    for (std::size_t y = 0; y < height; ++y) {
      const double oy = overlap(y, n.row, n.grid, height);
      if (oy == 0.0) continue;
      for (std::size_t x = 0; x < width; ++x) {
        const double ox = overlap(x, n.col, n.grid, width);
        if (ox == 0.0) continue;
        pool_rows[i][y * width + x] = oy * ox / area;
      }
    }
  }
  for (std::size_t s = 0; s < topology.scales.size(); ++s) {
    const std::size_t g = topology.scales[s];
    for (std::size_t y = 0; y < height; ++y) {
      const auto ty = taps(y, g, height, upsampling);
      for (std::size_t x = 0; x < width; ++x) {
        for (const auto& [cy, wy] : ty) {
          for (const auto& [cx, wx] : taps(x, g, width, upsampling)) {
            unpool_rows[y * width + x][index.at({s, cy, cx})] += wy * wx;
          }
        }
      }
    }
  }
  maps.pool = from_rows(height * width, pool_rows);
  maps.unpool = from_rows(maps.nodes, unpool_rows);
  return maps;
}

Tensor pool_to_nodes(const Tensor& frame, const RegionMaps& maps, std::size_t batch, const Tensor& weight,
                     const std::optional<Tensor>& bias) {
  Tensor out = matmul(apply_sparse(maps.pool, frame, batch), weight);
  return bias ? add(out, *bias) : out;
}

Tensor unpool_from_nodes(const Tensor& nodes, const RegionMaps& maps, std::size_t batch) {
  return apply_sparse(maps.unpool, nodes, batch);
}

RSTG_NAMESPACE_END
