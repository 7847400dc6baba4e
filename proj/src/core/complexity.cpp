// Copyright 2026 The RSTG Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "rstg/complexity.hpp"

RSTG_NAMESPACE_BEGIN

std::uint64_t predicted_space_messages(std::uint64_t T, std::uint64_t E, std::uint64_t K) { return T * 2 * E * K; }

std::uint64_t predicted_time_updates(std::uint64_t T, std::uint64_t N, std::uint64_t K) { return T * N * (K + 1); }

std::uint64_t count_messages_full_graph(std::uint64_t T, std::uint64_t N, std::uint64_t K) { return T * T * N * N * K; }

nlohmann::json ComplexityReport::to_json() const {
  return {{"T", T},
          {"N", N},
          {"E", E},
          {"K", K},
          {"space_messages", space_messages},
          {"time_updates", time_updates},
          {"factorized", factorized()},
          {"full_graph_reference", full_graph_reference},
          {"savings_ratio", savings_ratio}};
}

namespace {

void finish(ComplexityReport& r) {
  r.full_graph_reference = count_messages_full_graph(r.T, r.N, r.K);
  r.savings_ratio = r.factorized() ? static_cast<double>(r.full_graph_reference) / static_cast<double>(r.factorized()) : 0.0;
}

}  // namespace

ComplexityReport complexity_formula(std::uint64_t T, std::uint64_t N, std::uint64_t E, std::uint64_t K) {
  ComplexityReport r{T, N, E, K};
  r.space_messages = predicted_space_messages(T, E, K);
  r.time_updates = predicted_time_updates(T, N, K);
  finish(r);
  return r;
}

ComplexityReport complexity_measured(const RstgModel& model, std::uint64_t T) {
  const MessageCounter& c = model.counter();
  ComplexityReport r{T, model.topology().num_nodes(), edge_count(model.topology()), model.config().iterations};
  r.space_messages = c.space_per_video();
  r.time_updates = c.time_per_video();
  finish(r);
  return r;
}

ComplexityReport complexity_expected(const RstgConfig& config, const GraphTopology& topology, std::uint64_t T) {
  const std::uint64_t N = topology.num_nodes();
  const std::uint64_t E = edge_count(topology);
  const std::uint64_t K = config.iterations;
  ComplexityReport r{T, N, E, K};
  r.space_messages = predicted_space_messages(T, E, K);
  switch (config.scheduler) {
    case Scheduler::all_temp: r.time_updates = predicted_time_updates(T, N, K); break;
    case Scheduler::one_temp:
    case Scheduler::time_only: r.time_updates = T * N; break;
    case Scheduler::space_only: r.time_updates = 0; break;
  }
  finish(r);
  return r;
}

RSTG_NAMESPACE_END
