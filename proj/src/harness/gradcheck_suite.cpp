// Copyright 2026 The RSTG Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "rstg/gradcheck_suite.hpp"

#include <chrono>
#include <random>

#include "rstg/backbone.hpp"
#include "rstg/nn_ops.hpp"
#include "rstg/random.hpp"

RSTG_NAMESPACE_BEGIN

FeatureVolume random_volume(std::size_t batch, std::size_t time, std::size_t height, std::size_t width,
                            std::size_t channels, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  FeatureVolume fv{batch, time, height, width, channels, {}};
  for (std::size_t t = 0; t < time; ++t) {
    std::vector<real> v(batch * height * width * channels);
    for (real& x : v) x = static_cast<real>(u(rng));
    fv.frames.emplace_back(Shape{batch * height * width, channels}, std::move(v));
  }
  return fv;
}

std::vector<std::string> gradcheck_targets() {
  return {"all-temp",     "1-temp",         "space-only",     "time-only", "homogeneous",
          "positional-all-temp", "to-map",  "full-adjacency", "scale-specific", "softmax-attention",
          "mean-lstm",    "conv-lstm",      "backbone-mean-lstm"};
}

RstgConfig tiny_rstg_config(const std::string& target, const TinySetup& s) {
  RstgConfig c;
  c.scales = s.scales;
  c.dim = s.dim;
  c.iterations = s.iterations;
  if (target == "all-temp") {
  } else if (target == "1-temp") {
    c.scheduler = Scheduler::one_temp;
  } else if (target == "space-only") {
    c.scheduler = Scheduler::space_only;
  } else if (target == "time-only") {
    c.scheduler = Scheduler::time_only;
    c.iterations = 0;
  } else if (target == "homogeneous") {
    c.homogeneous = true;
  } else if (target == "positional-all-temp") {
    c.positional = true;
  } else if (target == "to-map") {
    c.aggregation = Aggregation::to_map;
  } else if (target == "full-adjacency") {
    c.adjacency = AdjacencyMode::full;
  } else if (target == "scale-specific") {
    c.scale_specific_update = true;
    c.per_slot_time = true;
  } else if (target == "softmax-attention") {
    c.attention_softmax = true;
  } else {
    throw std::invalid_argument("not an RSTG gradcheck target: '" + target + "'");
  }
  return c;
}

GradcheckCase run_gradcheck_case(const std::string& target, std::uint64_t seed, const GradCheckOptions& options,
                                 const TinySetup& s) {
  const auto started = std::chrono::steady_clock::now();
  ParameterStore store(seed);
  const std::vector<int> labels = [&] {
    std::vector<int> l;
    for (std::size_t b = 0; b < s.batch; ++b) l.push_back(static_cast<int>((b * 17 + seed) % syncmnist::kNumClasses));
    return l;
  }();

  LossClosure loss;
  const bool is_baseline = target == "mean-lstm" || target == "conv-lstm" || target == "backbone-mean-lstm";
  if (!is_baseline) {
    const RstgConfig cfg = tiny_rstg_config(target, s);
    auto model = std::make_shared<RstgModel>(store, cfg, s.channels);
    const std::size_t head_in = cfg.aggregation == Aggregation::to_vec ? s.dim : s.channels;
    auto head = std::make_shared<Linear>(store, "head", head_in, syncmnist::kNumClasses);
    const FeatureVolume fv = random_volume(s.batch, s.time, s.height, s.width, s.channels, derive_seed(seed, 1));
    loss = [model, head, fv, labels, cfg, s]() {
      RstgOutput out = model->forward(fv);
      if (cfg.aggregation == Aggregation::to_vec) return cross_entropy((*head)(out.vec), labels);
      Tensor pooled;
      for (const Tensor& f : out.map.frames) {
        const Tensor m = spatial_mean(f, s.batch);
        pooled = pooled.defined() ? add(pooled, m) : m;
      }
      return cross_entropy((*head)(pooled), labels);
    };
  } else {
    BaselineConfig bc;
    bc.kind = target == "conv-lstm" ? BaselineKind::conv_lstm : BaselineKind::mean_lstm;
    bc.hidden = s.dim;
    bc.conv_widths = {3, 3, 3};
    auto baseline = std::make_shared<Baseline>(store, bc, s.channels);
    auto head = std::make_shared<Linear>(store, "head", s.dim, syncmnist::kNumClasses);
    if (target == "backbone-mean-lstm") {
      // Tiny backbone on 8x8 frames: two conv stages -> 2x2 x C maps.
      auto backbone = std::make_shared<ConvBackbone>(store, BackboneConfig{{3, s.channels}, 1});
      std::mt19937_64 rng(derive_seed(seed, 2));
      std::uniform_real_distribution<double> u(0.0, 1.0);
      std::vector<real> px(s.time * s.batch * 8 * 8);
      for (real& p : px) p = static_cast<real>(u(rng));
      const Tensor frames({s.time * s.batch, 8, 8, 1}, std::move(px));
      loss = [baseline, head, backbone, frames, labels, s]() {
        const FeatureVolume fv = to_volume(backbone->forward(frames), s.batch, s.time);
        return cross_entropy((*head)(baseline->forward(fv, true)), labels);
      };
    } else {
      const FeatureVolume fv = random_volume(s.batch, s.time, s.height, s.width, s.channels, derive_seed(seed, 1));
      loss = [baseline, head, fv, labels]() { return cross_entropy((*head)(baseline->forward(fv, true)), labels); };
    }
  }

  GradcheckCase result;
  result.target = target;
  const auto params = store.trainable();
  result.parameters = store.trainable_count();
  result.report = check_gradients(params, loss, options);
  result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return result;
}

RSTG_NAMESPACE_END
