// Copyright 2026 The RSTG Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "rstg/parameters.hpp"

RSTG_NAMESPACE_BEGIN

/// Two evaluations of the loss closure at identical parameters disagreed.
class NondeterminismError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GradCheckOptions {
  double step = 1e-5;
  double tolerance = 1e-4;
  // rel = |a - n| / max(|a|, |n|, floor)
  double denominator_floor = 1e-5;
  // 0 checks every entry; otherwise an evenly spaced subset per parameter.
  std::size_t max_entries_per_parameter = 0;
};

struct ParameterGradCheck {
  std::string name;
  std::size_t checked = 0;
  double max_rel_error = 0;
  std::size_t worst_index = 0;
  double worst_analytic = 0;
  double worst_numeric = 0;
  bool passed = true;
};

struct GradCheckReport {
  std::vector<ParameterGradCheck> parameters;
  double max_rel_error = 0;
  double tolerance = 0;
  bool passed = true;

  nlohmann::json to_json() const;
};

using LossClosure = std::function<Tensor()>;

/// Compares analytic gradients of `loss` with central differences for every
/// listed parameter. The closure must rebuild the graph from the current
/// parameter values on every call.
GradCheckReport check_gradients(const std::vector<Parameter>& parameters, const LossClosure& loss,
                                const GradCheckOptions& options = {});

/// Relative error with the floor from `options`.
double relative_error(double analytic, double numeric, double floor);

RSTG_NAMESPACE_END
