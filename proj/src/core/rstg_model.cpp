// Copyright 2026 The RSTG Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "rstg/rstg_model.hpp"

#include <algorithm>
#include <numeric>
#include <tuple>
#include <stdexcept>

RSTG_NAMESPACE_BEGIN

namespace {

Tensor sum_all(const std::vector<Tensor>& parts) {
  Tensor acc = parts.front();
  for (std::size_t i = 1; i < parts.size(); ++i) acc = add(acc, parts[i]);
  return acc;
}

}  // namespace

void FeatureVolume::validate() const {
  if (batch == 0 || time == 0 || height == 0 || width == 0 || channels == 0) {
    throw ShapeError("feature volume has a zero extent: " + shape_to_string(shape()));
  }
  if (frames.size() != time) {
    throw ShapeError("feature volume declares " + std::to_string(time) + " steps but holds " +
                     std::to_string(frames.size()));
  }
  const Shape expected{batch * height * width, channels};
  for (const Tensor& f : frames) {
    if (f.shape() != expected) {
      throw ShapeError("feature frame " + shape_to_string(f.shape()) + ", expected " + shape_to_string(expected));
    }
  }
}

Scheduler parse_scheduler(const std::string& s) {
  if (s == "all-temp") return Scheduler::all_temp;
  if (s == "1-temp") return Scheduler::one_temp;
  if (s == "space-only") return Scheduler::space_only;
  if (s == "time-only") return Scheduler::time_only;
  throw std::invalid_argument("unknown scheduler '" + s + "' (all-temp|1-temp|space-only|time-only)");
}

GatherMode parse_gather(const std::string& s) {
  if (s == "attention") return GatherMode::attention;
  if (s == "sum") return GatherMode::sum;
  throw std::invalid_argument("unknown gather mode '" + s + "' (attention|sum)");
}

Aggregation parse_aggregation(const std::string& s) {
  if (s == "to-vec") return Aggregation::to_vec;
  if (s == "to-map") return Aggregation::to_map;
  throw std::invalid_argument("unknown aggregation '" + s + "' (to-vec|to-map)");
}

std::string to_string(Scheduler s) {
  switch (s) {
    case Scheduler::all_temp: return "all-temp";
    case Scheduler::one_temp: return "1-temp";
    case Scheduler::space_only: return "space-only";
    case Scheduler::time_only: return "time-only";
  }
  return "?";
}

std::string to_string(GatherMode g) { return g == GatherMode::attention ? "attention" : "sum"; }
std::string to_string(Aggregation a) { return a == Aggregation::to_vec ? "to-vec" : "to-map"; }

void RstgConfig::validate() const {
  if (scales.empty()) throw std::invalid_argument("rstg: empty scale list");
  for (std::size_t g : scales) {
    if (g == 0) throw std::invalid_argument("rstg: grid sizes must be >= 1");
  }
  if (dim == 0) throw std::invalid_argument("rstg: dim must be positive");
  if (scheduler == Scheduler::time_only) {
    if (iterations != 0) throw std::invalid_argument("rstg: time-only passes no messages, iterations must be 0");
    if (homogeneous) throw std::invalid_argument("rstg: time-only cannot be homogeneous");
  } else if (iterations == 0) {
    throw std::invalid_argument("rstg: " + to_string(scheduler) + " needs iterations >= 1");
  }
  if (scheduler == Scheduler::space_only && homogeneous) {
    throw std::invalid_argument("rstg: space-only has no temporal stage to make homogeneous");
  }
}

std::size_t RstgConfig::time_slots() const {
  switch (scheduler) {
    case Scheduler::all_temp: return iterations + 1;
    case Scheduler::one_temp:
    case Scheduler::time_only: return 1;
    case Scheduler::space_only: return 0;
  }
  return 0;
}

nlohmann::json to_json(const RstgConfig& c) {
  return {{"scales", c.scales},
          {"dim", c.dim},
          {"iterations", c.iterations},
          {"scheduler", to_string(c.scheduler)},
          {"homogeneous", c.homogeneous},
          {"positional", c.positional},
          {"adjacency", to_string(c.adjacency)},
          {"connectivity", to_string(c.connectivity)},
          {"gather", to_string(c.gather)},
          {"attention_softmax", c.attention_softmax},
          {"scale_specific_update", c.scale_specific_update},
          {"aggregation", to_string(c.aggregation)},
          {"aggregate_all_steps", c.aggregate_all_steps},
          {"per_slot_time", c.per_slot_time},
          {"residual", c.residual},
          {"mlp_hidden", c.mlp_hidden},
          {"attention_dim", c.attention_dim},
          {"hidden_activation", to_string(c.hidden_activation)},
          {"output_activation", to_string(c.output_activation)},
          {"upsampling", to_string(c.upsampling)}};
}

RstgConfig rstg_config_from_json(const nlohmann::json& j, const RstgConfig& base) {
  RstgConfig c = base;
  for (const auto& [key, value] : j.items()) {
    if (key == "scales") c.scales = value.get<std::vector<std::size_t>>();
    else if (key == "dim") c.dim = value.get<std::size_t>();
    else if (key == "iterations") c.iterations = value.get<std::size_t>();
    else if (key == "scheduler") c.scheduler = parse_scheduler(value.get<std::string>());
    else if (key == "homogeneous") c.homogeneous = value.get<bool>();
    else if (key == "positional") c.positional = value.get<bool>();
    else if (key == "adjacency") c.adjacency = parse_adjacency(value.get<std::string>());
    else if (key == "connectivity") c.connectivity = parse_connectivity(value.is_number() ? std::to_string(value.get<int>()) : value.get<std::string>());
    else if (key == "gather") c.gather = parse_gather(value.get<std::string>());
    else if (key == "attention_softmax") c.attention_softmax = value.get<bool>();
    else if (key == "scale_specific_update") c.scale_specific_update = value.get<bool>();
    else if (key == "aggregation") c.aggregation = parse_aggregation(value.get<std::string>());
    else if (key == "aggregate_all_steps") c.aggregate_all_steps = value.get<bool>();
    else if (key == "per_slot_time") c.per_slot_time = value.get<bool>();
    else if (key == "residual") c.residual = value.get<bool>();
    else if (key == "mlp_hidden") c.mlp_hidden = value.get<std::size_t>();
    else if (key == "attention_dim") c.attention_dim = value.get<std::size_t>();
    else if (key == "hidden_activation") c.hidden_activation = parse_activation(value.get<std::string>());
    else if (key == "output_activation") c.output_activation = parse_activation(value.get<std::string>());
    else if (key == "upsampling") c.upsampling = parse_upsampling(value.get<std::string>());
    else throw std::invalid_argument("unknown model field '" + key + "'");
  }
  return c;
}

RstgModel::RstgModel(ParameterStore& store, RstgConfig config, std::size_t input_channels, const std::string& prefix)
    : config_(std::move(config)), input_channels_(input_channels) {
  config_.validate();
  topology_ = build_topology(config_.scales, {config_.adjacency, config_.connectivity});
  init(store, prefix);
}

RstgModel::RstgModel(ParameterStore& store, RstgConfig config, std::size_t input_channels, GraphTopology topology,
                     const std::string& prefix)
    : config_(std::move(config)), input_channels_(input_channels), topology_(std::move(topology)) {
  config_.validate();
  init(store, prefix);
}

void RstgModel::init(ParameterStore& store, const std::string& prefix) {
  if (input_channels_ == 0) throw std::invalid_argument("rstg: input channel count must be positive");
  const std::size_t D = config_.dim;
  const std::size_t hidden = config_.hidden_width();
  input_proj_ = Linear(store, prefix + ".input", input_channels_, D);

  const bool passes_messages = config_.scheduler != Scheduler::time_only;
  if (passes_messages) {
    const std::size_t send_in = 2 * D + (config_.positional ? kPosLength : 0);
    send_ = Mlp(store, prefix + ".send", send_in, hidden, D, config_.hidden_activation, config_.output_activation);
    if (config_.gather == GatherMode::attention) {
      alpha1_ = Linear(store, prefix + ".alpha1", D, config_.alpha_width(), false);
      alpha2_ = Linear(store, prefix + ".alpha2", D, config_.alpha_width(), false);
    }
    if (config_.scale_specific_update) {
      for (std::size_t s = 0; s < config_.scales.size(); ++s) {
        update_.emplace_back(store, prefix + ".update.s" + std::to_string(s), 2 * D, hidden, D,
                             config_.hidden_activation, config_.output_activation);
      }
    } else {
      update_.emplace_back(store, prefix + ".update", 2 * D, hidden, D, config_.hidden_activation,
                           config_.output_activation);
    }
  }
  if (!config_.homogeneous && config_.time_slots() > 0) {
    const std::size_t cells = config_.per_slot_time ? config_.time_slots() : 1;
    for (std::size_t k = 0; k < cells; ++k) {
      time_.emplace_back(store, config_.per_slot_time ? prefix + ".time.k" + std::to_string(k) : prefix + ".time", D,
                         D);
    }
  }
  if (config_.aggregation == Aggregation::to_map) {
    map_proj_ = Linear(store, prefix + ".to_map", D, input_channels_, false);
  }
  if (config_.positional) {
    std::vector<real> pos;
    pos.reserve(topology_.num_nodes() * kPosLength);
    for (const auto& m : topology_.positional_maps) {
      for (double x : m) pos.push_back(static_cast<real>(x));
    }
    positions_ = Tensor({topology_.num_nodes(), kPosLength}, std::move(pos));
  }
}

const RstgModel::EdgeIndex& RstgModel::edge_index(std::size_t batch) {
  auto it = edge_cache_.find(batch);
  if (it != edge_cache_.end()) return it->second;
  EdgeIndex idx;
  const std::size_t N = topology_.num_nodes();
  // Edges ordered by the grid positions of (receiver, sender), not by node
  // labels: every receiver then sums its messages in the same order under any
  // relabeling or shuffle of the edge list.
  auto key = [&](std::size_t n) {
    const NodeRegion& r = topology_.nodes[n];
    return std::make_tuple(r.scale_index, r.row, r.col);
  };
  std::vector<std::pair<std::size_t, std::size_t>> edges = topology_.edges;
  std::sort(edges.begin(), edges.end(), [&](const auto& x, const auto& y) {
    return std::make_pair(key(x.second), key(x.first)) < std::make_pair(key(y.second), key(y.first));
  });
  for (std::size_t b = 0; b < batch; ++b) {
    for (const auto& [j, i] : edges) {
      idx.src.push_back(b * N + j);
      idx.dst.push_back(b * N + i);
      idx.src_node.push_back(j);
    }
  }
  return edge_cache_.emplace(batch, std::move(idx)).first->second;
}

const RstgModel::ScaleRows& RstgModel::scale_rows(std::size_t batch) {
  auto it = scale_cache_.find(batch);
  if (it != scale_cache_.end()) return it->second;
  ScaleRows sr;
  sr.rows.resize(config_.scales.size());
  const std::size_t N = topology_.num_nodes();
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t i = 0; i < N; ++i) sr.rows[topology_.nodes[i].scale_index].push_back(b * N + i);
  }
  return scale_cache_.emplace(batch, std::move(sr)).first->second;
}

const RegionMaps& RstgModel::region_maps(std::size_t height, std::size_t width) {
  auto key = std::make_pair(height, width);
  auto it = map_cache_.find(key);
  if (it != map_cache_.end()) return it->second;
  return map_cache_.emplace(key, build_region_maps(topology_, height, width, config_.upsampling)).first->second;
}

Tensor RstgModel::positions() const { return positions_; }

Tensor RstgModel::pool(const Tensor& frame, std::size_t batch, std::size_t height, std::size_t width) {
  return pool_to_nodes(frame, region_maps(height, width), batch, input_proj_.weight, input_proj_.bias);
}

Tensor RstgModel::send_from(const Tensor& sender, const Tensor& receiver, std::span<const std::size_t> src,
                            std::span<const std::size_t> dst, std::span<const std::size_t> src_node) {
  // First layer of MLP_s on [v_j | v_i | pos_j], evaluated per node and then gathered per edge.
  const std::size_t D = config_.dim;
  const Tensor& w1 = send_.first.weight;
  Tensor pre = add(gather_rows(matmul(sender, slice(w1, 0, 0, D)), src),
                   gather_rows(matmul(receiver, slice(w1, 0, D, 2 * D)), dst));
  if (config_.positional) {
    pre = add(pre, gather_rows(matmul(positions_, slice(w1, 0, 2 * D, 2 * D + kPosLength)), src_node));
  }
  return send_.from_hidden_pre(add(pre, send_.first.bias));
}

Tensor RstgModel::alpha_from(const Tensor& sender, const Tensor& receiver, std::span<const std::size_t> src,
                             std::span<const std::size_t> dst) {
  return row_dot(gather_rows(alpha1_(sender), src), gather_rows(alpha2_(receiver), dst));
}

Tensor RstgModel::messages(const Tensor& v, std::size_t batch) {
  const EdgeIndex& ei = edge_index(batch);
  return send_from(v, v, ei.src, ei.dst, ei.src_node);
}

Tensor RstgModel::attention(const Tensor& v, std::size_t batch) {
  if (config_.gather != GatherMode::attention) throw std::logic_error("rstg: attention is off in this config");
  const EdgeIndex& ei = edge_index(batch);
  return alpha_from(v, v, ei.src, ei.dst);
}

Tensor RstgModel::gather(const Tensor& v, std::size_t batch) {
  const std::size_t rows = batch * topology_.num_nodes();
  if (v.shape() != Shape{rows, config_.dim}) {
    throw ShapeError("rstg: node tensor " + shape_to_string(v.shape()) + ", expected " +
                     shape_to_string({rows, config_.dim}));
  }
  const EdgeIndex& ei = edge_index(batch);
  counter_.space_messages += ei.src.size();
  if (ei.src.empty()) return Tensor({rows, config_.dim});
  Tensor m = send_from(v, v, ei.src, ei.dst, ei.src_node);
  if (config_.gather == GatherMode::attention) {
    Tensor a = alpha_from(v, v, ei.src, ei.dst);
    if (config_.attention_softmax) a = segment_softmax(a, ei.dst, rows);
    m = mul(m, a);
  }
  return scatter_add_rows(m, ei.dst, rows);
}

Tensor RstgModel::update(const Tensor& v, const Tensor& g, std::size_t batch) {
  const Tensor x = concat(v, g, 1);
  if (update_.size() == 1) return update_[0](x);
  const ScaleRows& sr = scale_rows(batch);
  const std::size_t rows = batch * topology_.num_nodes();
  Tensor out;
  for (std::size_t s = 0; s < update_.size(); ++s) {
    Tensor part = scatter_add_rows(update_[s](gather_rows(x, sr.rows[s])), sr.rows[s], rows);
    out = out.defined() ? add(out, part) : part;
  }
  return out;
}

Tensor RstgModel::space_stage(const Tensor& v, std::size_t batch) { return update(v, gather(v, batch), batch); }

Tensor RstgModel::time_stage(const Tensor& v, NodeStates& states, std::size_t slot, std::size_t batch) {
  if (slot >= states.slots.size()) {
    throw std::out_of_range("rstg: time slot " + std::to_string(slot) + " out of range (" +
                            std::to_string(states.slots.size()) + " slots)");
  }
  const std::size_t N = topology_.num_nodes();
  counter_.time_updates += batch * N;
  LstmState& state = states.slots[slot];
  if (!config_.homogeneous) {
    state = time_cell(slot)(v, state);
    return state.h;
  }
  // Previous slot state acts as the single sending neighbour of each node.
  std::vector<std::size_t> self(batch * N), node(batch * N);
  std::iota(self.begin(), self.end(), std::size_t{0});
  for (std::size_t r = 0; r < self.size(); ++r) node[r] = r % N;
  Tensor m = send_from(state.h, v, self, self, node);
  if (config_.gather == GatherMode::attention && !config_.attention_softmax) m = mul(m, alpha_from(state.h, v, self, self));
  state.h = update(v, m, batch);
  return state.h;
}

NodeStates RstgModel::initial_states(std::size_t batch) const {
  NodeStates s;
  const std::size_t rows = batch * topology_.num_nodes();
  for (std::size_t k = 0; k < config_.time_slots(); ++k) {
    s.slots.push_back({Tensor({rows, config_.dim}), Tensor({rows, config_.dim})});
  }
  return s;
}

Tensor RstgModel::step(const Tensor& pooled, NodeStates& states, std::size_t batch) {
  const std::size_t K = config_.iterations;
  const bool res = config_.residual;
  auto space = [&](const Tensor& v) { return res ? add(v, space_stage(v, batch)) : space_stage(v, batch); };
  auto time = [&](const Tensor& v, std::size_t slot) {
    return res ? add(v, time_stage(v, states, slot, batch)) : time_stage(v, states, slot, batch);
  };
  Tensor v = pooled;
  switch (config_.scheduler) {
    case Scheduler::all_temp:
      for (std::size_t k = 0; k < K; ++k) v = space(time(v, k));
      return time(v, K);
    case Scheduler::one_temp:
      for (std::size_t k = 0; k < K; ++k) v = space(v);
      return time(v, 0);
    case Scheduler::time_only:
      return time(v, 0);
    case Scheduler::space_only:
      for (std::size_t k = 0; k < K; ++k) v = space(v);
      return v;
  }
  return v;
}

RstgOutput RstgModel::forward(const FeatureVolume& features) {
  features.validate();
  if (features.channels != input_channels_) {
    throw ShapeError("rstg: feature volume has " + std::to_string(features.channels) + " channels, model expects " +
                     std::to_string(input_channels_));
  }
  counter_.reset();
  const std::size_t B = features.batch;
  counter_.videos = B;
  const std::size_t N = topology_.num_nodes();
  const std::size_t D = config_.dim;

  RstgOutput out;
  NodeStates states = initial_states(B);
  for (std::size_t t = 0; t < features.time; ++t) {
    const Tensor pooled = pool(features.frames[t], B, features.height, features.width);
    out.node_outputs.push_back(step(pooled, states, B));
  }

  Tensor nodes;
  if (config_.scheduler == Scheduler::space_only) {
    // The only temporal operation: average over time.
    nodes = scale(sum_all(out.node_outputs), real(1) / static_cast<real>(features.time));
  } else if (config_.aggregate_all_steps) {
    nodes = sum_all(out.node_outputs);
  } else {
    nodes = out.node_outputs.back();
  }
  out.vec = reduce(ReduceOp::sum, reshape(nodes, {B, N, D}), {1});

  if (config_.aggregation == Aggregation::to_map) {
    const RegionMaps& maps = region_maps(features.height, features.width);
    out.map = features;
    for (std::size_t t = 0; t < features.time; ++t) {
      out.map.frames[t] = add(unpool_from_nodes(map_proj_(out.node_outputs[t]), maps, B), features.frames[t]);
    }
  }
  return out;
}

Tensor RstgModel::send_pair(const Tensor& vj, const Tensor& vi, std::size_t sender) const {
  std::vector<Tensor> parts{vj, vi};
  if (config_.positional) parts.push_back(slice(positions_, 0, sender, sender + 1));
  return send_(concat(parts, 1));
}

Tensor RstgModel::alpha_pair(const Tensor& vj, const Tensor& vi) const {
  return row_dot(alpha1_(vj), alpha2_(vi));
}

RSTG_NAMESPACE_END
