// Copyright 2026 The RSTG Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "rstg/topology.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <stdexcept>

RSTG_NAMESPACE_BEGIN

AdjacencyMode parse_adjacency(const std::string& s) {
  if (s == "sparse") return AdjacencyMode::sparse;
  if (s == "full") return AdjacencyMode::full;
  throw std::invalid_argument("unknown adjacency mode '" + s + "' (sparse|full)");
}

Connectivity parse_connectivity(const std::string& s) {
  if (s == "8" || s == "eight") return Connectivity::eight;
  if (s == "4" || s == "four") return Connectivity::four;
  throw std::invalid_argument("unknown connectivity '" + s + "' (8|4)");
}

Upsampling parse_upsampling(const std::string& s) {
  if (s == "nearest") return Upsampling::nearest;
  if (s == "bilinear") return Upsampling::bilinear;
  throw std::invalid_argument("unknown upsampling '" + s + "' (nearest|bilinear)");
}

std::string to_string(AdjacencyMode m) { return m == AdjacencyMode::sparse ? "sparse" : "full"; }
std::string to_string(Connectivity c) { return c == Connectivity::eight ? "8" : "4"; }
std::string to_string(Upsampling u) { return u == Upsampling::nearest ? "nearest" : "bilinear"; }

namespace {

// [a/ga, (a+1)/ga) and [b/gb, (b+1)/gb) overlap with positive length.
bool spans_overlap(std::size_t a, std::size_t ga, std::size_t b, std::size_t gb) {
  return a * gb < (b + 1) * ga && b * ga < (a + 1) * gb;
}

// Cell c of the 6-grid has its center inside row/col span index r of grid g.
bool center_inside(std::size_t c, std::size_t r, std::size_t g) {
  const std::size_t center = g * (2 * c + 1);  // scaled by 2*kPosGrid
  return 2 * kPosGrid * r <= center && center < 2 * kPosGrid * (r + 1);
}

std::size_t cell_of(double x) {
  return std::min(kPosGrid - 1, static_cast<std::size_t>(std::floor(x * static_cast<double>(kPosGrid))));
}

}  // namespace

bool regions_intersect(const NodeRegion& a, const NodeRegion& b) {
  return spans_overlap(a.row, a.grid, b.row, b.grid) && spans_overlap(a.col, a.grid, b.col, b.grid);
}

PositionalMap occupancy_map(const NodeRegion& node) {
  PositionalMap occ{};
  bool any = false;
  for (std::size_t y = 0; y < kPosGrid; ++y) {
    for (std::size_t x = 0; x < kPosGrid; ++x) {
      if (center_inside(y, node.row, node.grid) && center_inside(x, node.col, node.grid)) {
        occ[y * kPosGrid + x] = 1.0;
        any = true;
      }
    }
  }
  // Grids finer than 6x6 can miss every center: mark the cell under the region's center.
  if (!any) {
    const double cy = (node.region.top + node.region.bottom) / 2;
    const double cx = (node.region.left + node.region.right) / 2;
    occ[cell_of(cy) * kPosGrid + cell_of(cx)] = 1.0;
  }
  return occ;
}

PositionalMap positional_map(const NodeRegion& node) {
  const PositionalMap occ = occupancy_map(node);
  double k[3];
  for (int d = -1; d <= 1; ++d) k[d + 1] = std::exp(-0.5 * d * d);
  PositionalMap out{};
  const int n = static_cast<int>(kPosGrid);
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      double acc = 0, norm = 0;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const int yy = y + dy, xx = x + dx;
          if (yy < 0 || yy >= n || xx < 0 || xx >= n) continue;
          const double w = k[dy + 1] * k[dx + 1];
          acc += w * occ[yy * n + xx];
          norm += w;
        }
      }
      out[y * n + x] = acc / norm;
    }
  }
  return out;
}

std::vector<std::size_t> GraphTopology::edge_sources() const {
  std::vector<std::size_t> out;
  out.reserve(edges.size());
  for (const auto& e : edges) out.push_back(e.first);
  return out;
}

std::vector<std::size_t> GraphTopology::edge_targets() const {
  std::vector<std::size_t> out;
  out.reserve(edges.size());
  for (const auto& e : edges) out.push_back(e.second);
  return out;
}

std::vector<std::size_t> GraphTopology::node_scales() const {
  std::vector<std::size_t> out;
  out.reserve(nodes.size());
  for (const auto& n : nodes) out.push_back(n.scale_index);
  return out;
}

GraphTopology GraphTopology::permuted(std::span<const std::size_t> order) const {
  const std::size_t n = nodes.size();
  if (order.size() != n) throw std::invalid_argument("permutation size does not match node count");
  std::vector<std::size_t> new_index(n, n);
  for (std::size_t p = 0; p < n; ++p) {
    if (order[p] >= n || new_index[order[p]] != n) throw std::invalid_argument("not a permutation");
    new_index[order[p]] = p;
  }
  GraphTopology out = *this;
  for (std::size_t p = 0; p < n; ++p) {
    out.nodes[p] = nodes[order[p]];
    out.positional_maps[p] = positional_maps[order[p]];
  }
  for (auto& e : out.edges) e = {new_index[e.first], new_index[e.second]};
  std::sort(out.edges.begin(), out.edges.end());
  // scale_offset loses meaning after relabeling; per-node scale_index stays valid.
  out.scale_offset.clear();
  return out;
}

nlohmann::json GraphTopology::to_json() const {
  nlohmann::json js_nodes = nlohmann::json::array();
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto& n = nodes[i];
    js_nodes.push_back({{"id", i},
                        {"scale", n.scale_index},
                        {"grid", n.grid},
                        {"row", n.row},
                        {"col", n.col},
                        {"region", {n.region.top, n.region.left, n.region.bottom, n.region.right}}});
  }
  nlohmann::json undirected = nlohmann::json::array();
  for (const auto& [j, i] : edges) {
    if (j < i) undirected.push_back({j, i});
  }
  return {{"scales", scales},
          {"mode", to_string(mode)},
          {"connectivity", to_string(connectivity)},
          {"num_nodes", nodes.size()},
          {"num_edges", edge_count(*this)},
          {"nodes", js_nodes},
          {"edges", undirected}};
}

GraphTopology build_topology(const std::vector<std::size_t>& scales, const TopologyOptions& options) {
  if (scales.empty()) throw std::invalid_argument("build_topology: empty scale list");
  GraphTopology topo;
  topo.scales = scales;
  topo.mode = options.mode;
  topo.connectivity = options.connectivity;
  for (std::size_t s = 0; s < scales.size(); ++s) {
    const std::size_t g = scales[s];
    if (g == 0) throw std::invalid_argument("build_topology: grid sizes must be >= 1");
    topo.scale_offset.push_back(topo.nodes.size());
    const double step = 1.0 / static_cast<double>(g);
    for (std::size_t r = 0; r < g; ++r) {
      for (std::size_t c = 0; c < g; ++c) {
        NodeRegion node{s, g, r, c, {r * step, c * step, (r + 1) * step, (c + 1) * step}};
        topo.nodes.push_back(node);
        topo.positional_maps.push_back(positional_map(node));
      }
    }
  }
  const std::size_t n = topo.nodes.size();
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      if (i == j) continue;
      bool linked = true;
      if (options.mode == AdjacencyMode::sparse) {
        const NodeRegion& a = topo.nodes[j];
        const NodeRegion& b = topo.nodes[i];
        if (a.scale_index == b.scale_index) {
          const auto dr = static_cast<long>(a.row) - static_cast<long>(b.row);
          const auto dc = static_cast<long>(a.col) - static_cast<long>(b.col);
          linked = options.connectivity == Connectivity::eight ? std::max(std::labs(dr), std::labs(dc)) == 1
                                                               : std::labs(dr) + std::labs(dc) == 1;
        } else {
          linked = regions_intersect(a, b);
        }
      }
      if (linked) topo.edges.emplace_back(j, i);
    }
  }
  return topo;
}

std::size_t edge_count(const GraphTopology& topology) { return topology.edges.size() / 2; }

RSTG_NAMESPACE_END
