// Copyright 2026 The RSTG Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "rstg/ops.hpp"

RSTG_NAMESPACE_BEGIN

enum class AdjacencyMode { sparse, full };
enum class Connectivity { eight, four };
enum class Upsampling { nearest, bilinear };

AdjacencyMode parse_adjacency(const std::string& s);
Connectivity parse_connectivity(const std::string& s);
Upsampling parse_upsampling(const std::string& s);
std::string to_string(AdjacencyMode m);
std::string to_string(Connectivity c);
std::string to_string(Upsampling u);

inline constexpr std::size_t kPosGrid = 6;
inline constexpr std::size_t kPosLength = kPosGrid * kPosGrid;
using PositionalMap = std::array<double, kPosLength>;

/// Normalized rectangle [top, bottom) x [left, right) in [0,1]^2.
struct Rect {
  double top = 0, left = 0, bottom = 1, right = 1;
  double area() const { return (bottom - top) * (right - left); }
};

struct NodeRegion {
  std::size_t scale_index = 0;
  std::size_t grid = 1;  // the scale's grid is grid x grid
  std::size_t row = 0, col = 0;
  Rect region;
};

/// Strictly positive intersection area, decided in exact integer arithmetic.
bool regions_intersect(const NodeRegion& a, const NodeRegion& b);

/// 6x6 occupancy (cell center inside the region) smoothed by a normalized
/// 3x3 Gaussian (sigma 1) with renormalization at the borders.
PositionalMap positional_map(const NodeRegion& node);
/// Occupancy before smoothing.
PositionalMap occupancy_map(const NodeRegion& node);

struct TopologyOptions {
  AdjacencyMode mode = AdjacencyMode::sparse;
  Connectivity connectivity = Connectivity::eight;
};

struct GraphTopology {
  std::vector<std::size_t> scales;
  std::vector<std::size_t> scale_offset;  // first node index of each scale
  std::vector<NodeRegion> nodes;
  // Directed edges (source j, destination i), sorted, no self-edges.
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  std::vector<PositionalMap> positional_maps;
  AdjacencyMode mode = AdjacencyMode::sparse;
  Connectivity connectivity = Connectivity::eight;

  std::size_t num_nodes() const { return nodes.size(); }
  std::size_t num_directed_edges() const { return edges.size(); }
  std::vector<std::size_t> edge_sources() const;
  std::vector<std::size_t> edge_targets() const;
  std::vector<std::size_t> node_scales() const;

  /// Relabels nodes: new node p is old node order[p]. Edges are relabeled
  /// consistently and re-sorted.
  GraphTopology permuted(std::span<const std::size_t> order) const;

  nlohmann::json to_json() const;
};

GraphTopology build_topology(const std::vector<std::size_t>& scales, const TopologyOptions& options = {});

/// Undirected edge count E (|edges| / 2; N(N-1)/2 in full mode).
std::size_t edge_count(const GraphTopology& topology);

/// Linear maps between an H x W plane and the nodes of a topology.
struct RegionMaps {
  std::size_t height = 0, width = 0, nodes = 0;
  SparseMap pool;    // N x HW, area-weighted average
  SparseMap unpool;  // HW x N, per-scale upsample summed over scales
};

RegionMaps build_region_maps(const GraphTopology& topology, std::size_t height, std::size_t width,
                             Upsampling upsampling = Upsampling::nearest);

/// frame: [B*H*W, C] (rows b, y, x). Area-average per node, then x W + b.
/// Returns [B*N, D].
Tensor pool_to_nodes(const Tensor& frame, const RegionMaps& maps, std::size_t batch, const Tensor& weight,
                     const std::optional<Tensor>& bias = std::nullopt);

/// nodes: [B*N, C'] -> [B*H*W, C'].
Tensor unpool_from_nodes(const Tensor& nodes, const RegionMaps& maps, std::size_t batch);

RSTG_NAMESPACE_END
