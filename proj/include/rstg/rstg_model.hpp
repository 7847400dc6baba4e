// Copyright 2026 The RSTG Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rstg/feature_volume.hpp"
#include "rstg/layers.hpp"
#include "rstg/topology.hpp"

RSTG_NAMESPACE_BEGIN

enum class Scheduler { all_temp, one_temp, space_only, time_only };
enum class GatherMode { attention, sum };
enum class Aggregation { to_vec, to_map };

Scheduler parse_scheduler(const std::string& s);
GatherMode parse_gather(const std::string& s);
Aggregation parse_aggregation(const std::string& s);
std::string to_string(Scheduler s);
std::string to_string(GatherMode g);
std::string to_string(Aggregation a);

struct RstgConfig {
  std::vector<std::size_t> scales{1, 2, 3};
  std::size_t dim = 32;
  std::size_t iterations = 3;  // K
  Scheduler scheduler = Scheduler::all_temp;
  bool homogeneous = false;
  bool positional = false;
  AdjacencyMode adjacency = AdjacencyMode::sparse;
  Connectivity connectivity = Connectivity::eight;
  GatherMode gather = GatherMode::attention;
  bool attention_softmax = false;
  bool scale_specific_update = false;
  Aggregation aggregation = Aggregation::to_vec;
  bool aggregate_all_steps = false;  // to-vec over every t instead of the last one
  bool per_slot_time = false;
  bool residual = true;  // each stage returns input + stage output
  std::size_t mlp_hidden = 0;     // 0 -> dim
  std::size_t attention_dim = 0;  // 0 -> dim
  Activation hidden_activation = Activation::sigmoid;
  Activation output_activation = Activation::sigmoid;
  Upsampling upsampling = Upsampling::nearest;

  void validate() const;
  /// Temporal memories per node: K+1 for all-temp, 1 for 1-temp/time-only, 0 for space-only.
  std::size_t time_slots() const;
  std::size_t hidden_width() const { return mlp_hidden ? mlp_hidden : dim; }
  std::size_t alpha_width() const { return attention_dim ? attention_dim : dim; }
};

nlohmann::json to_json(const RstgConfig& c);
/// Fields missing from `j` keep the values of `base`.
RstgConfig rstg_config_from_json(const nlohmann::json& j, const RstgConfig& base = {});

/// Totals over every video of the batch since the last reset.
struct MessageCounter {
  std::uint64_t space_messages = 0;
  std::uint64_t time_updates = 0;
  std::uint64_t videos = 0;

  void reset() { *this = {}; }
  std::uint64_t space_per_video() const { return videos ? space_messages / videos : 0; }
  std::uint64_t time_per_video() const { return videos ? time_updates / videos : 0; }
};

/// Per-node temporal memories, one entry per slot. Each entry is [B*N, D].
/// The homogeneous variant keeps only h.
struct NodeStates {
  std::vector<LstmState> slots;
};

struct RstgOutput {
  Tensor vec;                       // [B, D] for to-vec
  FeatureVolume map;                // same shape as the input for to-map
  std::vector<Tensor> node_outputs; // per t, [B*N, D]
};

class RstgModel {
 public:
  RstgModel(ParameterStore& store, RstgConfig config, std::size_t input_channels,
            const std::string& prefix = "rstg");
  /// Uses an explicit topology (e.g. a relabeled one) instead of building it from the config.
  RstgModel(ParameterStore& store, RstgConfig config, std::size_t input_channels, GraphTopology topology,
            const std::string& prefix = "rstg");

  RstgOutput forward(const FeatureVolume& features);

  // Building blocks on batched node tensors [B*N, D].
  Tensor pool(const Tensor& frame, std::size_t batch, std::size_t height, std::size_t width);
  Tensor messages(const Tensor& v, std::size_t batch);   // f_send on every edge, [B*E, D]
  Tensor attention(const Tensor& v, std::size_t batch);  // alpha on every edge, [B*E, 1]
  Tensor gather(const Tensor& v, std::size_t batch);     // [B*N, D]
  Tensor update(const Tensor& v, const Tensor& g, std::size_t batch);
  Tensor space_stage(const Tensor& v, std::size_t batch);
  Tensor time_stage(const Tensor& v, NodeStates& states, std::size_t slot, std::size_t batch);
  NodeStates initial_states(std::size_t batch) const;
  /// One time step of the configured scheduler; returns the node outputs.
  Tensor step(const Tensor& pooled, NodeStates& states, std::size_t batch);

  // Single-pair forms, used to cross-check the batched path.
  Tensor send_pair(const Tensor& vj, const Tensor& vi, std::size_t sender) const;  // [1, D]
  Tensor alpha_pair(const Tensor& vj, const Tensor& vi) const;                     // [1, 1]

  const RstgConfig& config() const { return config_; }
  const GraphTopology& topology() const { return topology_; }
  const MessageCounter& counter() const { return counter_; }
  MessageCounter& counter() { return counter_; }
  std::size_t input_channels() const { return input_channels_; }

 private:
  struct EdgeIndex {
    std::vector<std::size_t> src, dst, src_node;
  };
  struct ScaleRows {
    std::vector<std::vector<std::size_t>> rows;  // per update set
  };

  void init(ParameterStore& store, const std::string& prefix);
  const EdgeIndex& edge_index(std::size_t batch);
  const ScaleRows& scale_rows(std::size_t batch);
  const RegionMaps& region_maps(std::size_t height, std::size_t width);
  Tensor positions() const;
  Tensor send_from(const Tensor& sender, const Tensor& receiver, std::span<const std::size_t> src,
                   std::span<const std::size_t> dst, std::span<const std::size_t> src_node);
  Tensor alpha_from(const Tensor& sender, const Tensor& receiver, std::span<const std::size_t> src,
                    std::span<const std::size_t> dst);
  const Mlp& update_mlp(std::size_t set) const { return update_[set]; }
  const LstmCell& time_cell(std::size_t slot) const { return time_[config_.per_slot_time ? slot : 0]; }

  RstgConfig config_;
  std::size_t input_channels_;
  GraphTopology topology_;
  MessageCounter counter_;

  Linear input_proj_;
  Mlp send_;
  Linear alpha1_, alpha2_;
  std::vector<Mlp> update_;  // one, or one per scale
  std::vector<LstmCell> time_;
  Linear map_proj_;
  Tensor positions_;  // [N, 36] constant

  std::map<std::size_t, EdgeIndex> edge_cache_;
  std::map<std::size_t, ScaleRows> scale_cache_;
  std::map<std::pair<std::size_t, std::size_t>, RegionMaps> map_cache_;
};

RSTG_NAMESPACE_END
