// Copyright 2026 The RSTG Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "checks.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <numeric>
#include <random>
#include <sstream>

#include "../topology_oracle.hpp"
#include "rstg/complexity.hpp"
#include "rstg/gradcheck_suite.hpp"
#include "rstg/rstg_model.hpp"

namespace rstg::acceptance {
namespace {

constexpr double kGradTolerance = 1e-4;
constexpr double kGradSecondsBudget = 120;
constexpr double kInvarianceTolerance = 1e-12;

bool same_bits(const Tensor& a, const Tensor& b) {
  return a.shape() == b.shape() && std::memcmp(a.data().data(), b.data().data(), a.data().size_bytes()) == 0;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) return INFINITY;
  double m = 0;
  for (std::size_t i = 0; i < a.numel(); ++i) m = std::max(m, std::abs(double(a.data()[i]) - double(b.data()[i])));
  return m;
}

Tensor random_rows(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<real> v(rows * cols);
  for (real& x : v) x = static_cast<real>(u(rng));
  return Tensor({rows, cols}, std::move(v));
}

RstgConfig base_config(Scheduler s) {
  RstgConfig c;
  c.scales = {1, 2, 3};
  c.dim = 6;
  c.iterations = s == Scheduler::time_only ? 0 : 2;
  c.scheduler = s;
  return c;
}

}  // namespace

Verdict gradient_correctness() {
  Verdict v{1, "gradient correctness (64-bit central differences)", true, ""};
  std::ostringstream out;
  double worst = 0, all_temp_seconds = 0;
  for (const std::string& target : gradcheck_targets()) {
    GradCheckOptions opt;
    opt.tolerance = kGradTolerance;
    const GradcheckCase c = run_gradcheck_case(target, 0, opt);
    worst = std::max(worst, c.report.max_rel_error);
    if (target == "all-temp") all_temp_seconds = c.seconds;
    if (!c.report.passed) {
      v.pass = false;
      out << target << " max rel err " << c.report.max_rel_error << "; ";
    }
  }
  if (all_temp_seconds > kGradSecondsBudget) v.pass = false;
  out << gradcheck_targets().size() << " targets, worst rel err " << worst << " (tol " << kGradTolerance
      << "), all-temp " << all_temp_seconds << " s (budget " << kGradSecondsBudget << " s)";
  v.detail = out.str();
  return v;
}

Verdict complexity_identity() {
  Verdict v{2, "complexity identity (message counters)", true, ""};
  std::size_t configs = 0, mismatches = 0;
  for (std::size_t T : {1, 4, 10}) {
    for (std::size_t K : {1, 3}) {
      for (const auto& scales : {std::vector<std::size_t>{1}, {1, 2}, {1, 2, 3}}) {
        for (auto mode : {AdjacencyMode::sparse, AdjacencyMode::full}) {
          RstgConfig cfg;
          cfg.scales = scales;
          cfg.dim = 4;
          cfg.iterations = K;
          cfg.adjacency = mode;
          ParameterStore store(1);
          RstgModel model(store, cfg, 2);
          model.forward(random_volume(2, T, 6, 6, 2, T * 10 + K));
          const std::uint64_t N = model.topology().num_nodes(), E = edge_count(model.topology());
          ++configs;
          mismatches += model.counter().space_per_video() != T * 2 * E * K;
          mismatches += model.counter().time_per_video() != T * N * (K + 1);
          mismatches += predicted_space_messages(T, E, K) != T * 2 * E * K;
          mismatches += predicted_time_updates(T, N, K) != T * N * (K + 1);
        }
      }
    }
  }
  v.pass = configs >= 12 && mismatches == 0;
  v.detail = std::to_string(configs) + " configurations, " + std::to_string(mismatches) + " mismatches";
  return v;
}

Verdict topology_oracle() {
  Verdict v{3, "topology oracle equivalence", true, ""};
  std::size_t cases = 0, mismatches = 0;
  for (const auto& scales : test::all_scale_lists()) {
    for (bool four : {false, true}) {
      for (bool full : {false, true}) {
        const GraphTopology t = build_topology(
            scales, {full ? AdjacencyMode::full : AdjacencyMode::sparse, four ? Connectivity::four : Connectivity::eight});
        const auto [n, e] = test::brute_force(scales, four, full);
        ++cases;
        mismatches += t.num_nodes() != n || edge_count(t) != e;
      }
    }
  }
  v.pass = mismatches == 0;
  v.detail = std::to_string(cases) + " scale lists x modes, " + std::to_string(mismatches) + " mismatches";
  return v;
}

Verdict aggregation_contracts() {
  Verdict v{7, "aggregation contracts (to-map shape, residual identity)", true, ""};
  std::size_t configs = 0, failures = 0;
  for (const auto& scales : {std::vector<std::size_t>{1}, {1, 2}, {1, 2, 3}, {2, 4}}) {
    for (auto up : {Upsampling::nearest, Upsampling::bilinear}) {
      for (auto [h, w] : {std::pair<std::size_t, std::size_t>{8, 8}, {7, 5}}) {
        RstgConfig cfg = base_config(Scheduler::all_temp);
        cfg.scales = scales;
        cfg.aggregation = Aggregation::to_map;
        cfg.upsampling = up;
        ParameterStore store(3);
        RstgModel model(store, cfg, 5);
        const FeatureVolume f = random_volume(2, 3, h, w, 5, configs);
        const RstgOutput out = model.forward(f);
        bool ok = out.map.shape() == f.shape();
        for (std::size_t t = 0; t < f.time; ++t) ok = ok && out.map.frames[t].shape() == f.frames[t].shape();

        // Zero node outputs: the map is the input, bit for bit.
        const RegionMaps& maps = build_region_maps(model.topology(), h, w, up);
        for (std::size_t t = 0; t < f.time; ++t) {
          const Tensor zero_nodes({2 * model.topology().num_nodes(), f.channels});
          ok = ok && same_bits(add(unpool_from_nodes(zero_nodes, maps, 2), f.frames[t]), f.frames[t]);
        }
        Tensor wmap = store.tensor("rstg.to_map.w");
        std::fill(wmap.mutable_data().begin(), wmap.mutable_data().end(), real(0));
        const RstgOutput zeroed = model.forward(f);
        for (std::size_t t = 0; t < f.time; ++t) ok = ok && same_bits(zeroed.map.frames[t], f.frames[t]);
        ++configs;
        failures += !ok;
      }
    }
  }
  v.pass = failures == 0;
  v.detail = std::to_string(configs) + " configurations, " + std::to_string(failures) + " failures";
  return v;
}

Verdict invariance_suite() {
  Verdict v{8, "invariance suite", true, ""};
  std::ostringstream out;

  // Gather under node relabeling, with and without softmax attention.
  bool gather_ok = true;
  for (bool softmax : {false, true}) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      RstgConfig cfg = base_config(Scheduler::all_temp);
      cfg.positional = true;
      cfg.attention_softmax = softmax;
      const GraphTopology base = build_topology(cfg.scales);
      std::vector<std::size_t> order(base.num_nodes());
      std::iota(order.begin(), order.end(), 0);
      std::mt19937_64 rng(seed);
      std::shuffle(order.begin(), order.end(), rng);
      ParameterStore s1(seed), s2(seed);
      RstgModel m1(s1, cfg, 4, base), m2(s2, cfg, 4, base.permuted(order));
      const std::size_t B = 2, N = base.num_nodes();
      const Tensor x = random_rows(B * N, cfg.dim, seed + 1);
      std::vector<std::size_t> rows;
      for (std::size_t b = 0; b < B; ++b)
        for (std::size_t p = 0; p < N; ++p) rows.push_back(b * N + order[p]);
      gather_ok = gather_ok && same_bits(gather_rows(m1.gather(x, B), rows), m2.gather(gather_rows(x, rows), B));
    }
  }
  out << "gather relabel " << (gather_ok ? "bit-exact" : "DIFFERS");

  // Future frames do not reach past outputs.
  double causal = 0;
  for (Scheduler s : {Scheduler::all_temp, Scheduler::one_temp, Scheduler::time_only}) {
    ParameterStore store(2);
    RstgModel model(store, base_config(s), 4);
    const FeatureVolume f = random_volume(2, 5, 6, 6, 4, 1);
    const RstgOutput ref = model.forward(f);
    for (std::size_t t = 0; t + 1 < f.time; ++t) {
      FeatureVolume g = f;
      for (std::size_t u = t + 1; u < f.time; ++u) g.frames[u] = random_rows(g.frames[u].dim(0), 4, 40 + u);
      const RstgOutput o = model.forward(g);
      for (std::size_t u = 0; u <= t; ++u) causal = std::max(causal, max_abs_diff(o.node_outputs[u], ref.node_outputs[u]));
    }
  }
  out << "; causality max diff " << causal;

  // Space-only ignores frame order.
  ParameterStore so_store(7);
  RstgModel so(so_store, base_config(Scheduler::space_only), 4);
  const FeatureVolume f = random_volume(2, 6, 6, 6, 4, 3);
  FeatureVolume g = f;
  std::mt19937_64 rng(9);
  std::shuffle(g.frames.begin(), g.frames.end(), rng);
  const double perm = max_abs_diff(so.forward(f).vec, so.forward(g).vec);
  out << "; space-only frame permutation diff " << perm;

  // Fixed seed, fixed output.
  bool determ = true;
  for (Scheduler s : {Scheduler::all_temp, Scheduler::one_temp, Scheduler::space_only, Scheduler::time_only}) {
    ParameterStore a(9), b(9);
    RstgModel ma(a, base_config(s), 4), mb(b, base_config(s), 4);
    const FeatureVolume x = random_volume(2, 4, 6, 6, 4, 12);
    const Tensor first = ma.forward(x).vec;
    determ = determ && same_bits(first, ma.forward(x).vec) && same_bits(first, mb.forward(x).vec);
  }
  out << "; determinism " << (determ ? "bit-exact" : "DIFFERS") << " (tol " << kInvarianceTolerance << ")";

  v.pass = gather_ok && causal <= kInvarianceTolerance && perm <= kInvarianceTolerance && determ;
  v.detail = out.str();
  return v;
}

}  // namespace rstg::acceptance
