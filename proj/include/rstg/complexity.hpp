// Copyright 2026 The RSTG Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

#include <json.hpp>

#include "rstg/rstg_model.hpp"

RSTG_NAMESPACE_BEGIN

/// T * 2E * K
std::uint64_t predicted_space_messages(std::uint64_t T, std::uint64_t E, std::uint64_t K);
/// T * N * (K + 1)
std::uint64_t predicted_time_updates(std::uint64_t T, std::uint64_t N, std::uint64_t K);
/// T^2 * N^2 * K, the cost of all-pairs space-time connectivity.
std::uint64_t count_messages_full_graph(std::uint64_t T, std::uint64_t N, std::uint64_t K);

struct ComplexityReport {
  std::uint64_t T = 0, N = 0, E = 0, K = 0;
  std::uint64_t space_messages = 0;
  std::uint64_t time_updates = 0;
  std::uint64_t full_graph_reference = 0;
  double savings_ratio = 0;  // full_graph_reference / (space_messages + time_updates)

  std::uint64_t factorized() const { return space_messages + time_updates; }
  nlohmann::json to_json() const;
};

ComplexityReport complexity_formula(std::uint64_t T, std::uint64_t N, std::uint64_t E, std::uint64_t K);

/// Counts per video from the model's live counters after a forward pass over T steps.
ComplexityReport complexity_measured(const RstgModel& model, std::uint64_t T);

/// Space/time counts the scheduler should produce per video.
ComplexityReport complexity_expected(const RstgConfig& config, const GraphTopology& topology, std::uint64_t T);

RSTG_NAMESPACE_END
