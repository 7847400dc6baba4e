// Copyright 2026 The RSTG Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "rstg/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

RSTG_NAMESPACE_BEGIN

double relative_error(double analytic, double numeric, double floor) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

nlohmann::json GradCheckReport::to_json() const {
  nlohmann::json params = nlohmann::json::array();
  for (const auto& p : parameters) {
    params.push_back({{"name", p.name},
                      {"checked", p.checked},
                      {"max_rel_error", p.max_rel_error},
                      {"worst_index", p.worst_index},
                      {"analytic", p.worst_analytic},
                      {"numeric", p.worst_numeric},
                      {"passed", p.passed}});
  }
  return {{"precision", kPrecisionName},
          {"tolerance", tolerance},
          {"max_rel_error", max_rel_error},
          {"passed", passed},
          {"parameters", params}};
}

GradCheckReport check_gradients(const std::vector<Parameter>& parameters, const LossClosure& loss,
                                const GradCheckOptions& options) {
  for (const Parameter& p : parameters) {
    Tensor t = p.tensor;
    t.zero_grad();
  }
  const Tensor first = loss();
  if (first.numel() != 1) throw ShapeError("gradient check needs a scalar loss, got " + shape_to_string(first.shape()));
  backward(first);

  {
    NoGradGuard guard;
    const real again = loss().item();
    if (std::memcmp(&again, first.data().data(), sizeof(real)) != 0) {
      throw NondeterminismError("loss closure is not deterministic: " + std::to_string(first.item()) + " vs " +
                                std::to_string(again));
    }
  }

  GradCheckReport report;
  report.tolerance = options.tolerance;
  NoGradGuard guard;
  for (const Parameter& p : parameters) {
    Tensor t = p.tensor;
    ParameterGradCheck result;
    result.name = p.name;
    const std::size_t n = t.numel();
    std::vector<real> analytic(n, real(0));
    if (t.has_grad()) std::copy(t.grad().begin(), t.grad().end(), analytic.begin());

    const std::size_t budget = options.max_entries_per_parameter;
    const std::size_t stride = (budget == 0 || budget >= n) ? 1 : (n + budget - 1) / budget;
    auto values = t.mutable_data();
    for (std::size_t i = 0; i < n; i += stride) {
      const real original = values[i];
      values[i] = original + static_cast<real>(options.step);
      const double up = loss().item();
      values[i] = original - static_cast<real>(options.step);
      const double down = loss().item();
      values[i] = original;
      const double numeric = (up - down) / (2 * options.step);
      const double err = relative_error(analytic[i], numeric, options.denominator_floor);
      ++result.checked;
      if (err >= result.max_rel_error) {
        result.max_rel_error = err;
        result.worst_index = i;
        result.worst_analytic = analytic[i];
        result.worst_numeric = numeric;
      }
    }
    result.passed = result.max_rel_error <= options.tolerance;
    report.max_rel_error = std::max(report.max_rel_error, result.max_rel_error);
    report.passed = report.passed && result.passed;
    report.parameters.push_back(result);
  }
  return report;
}

RSTG_NAMESPACE_END
