// Copyright 2026 The RSTG Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include <random>

#include "rstg/backbone.hpp"
#include "rstg/nn_ops.hpp"
#include "rstg/random.hpp"

RSTG_NAMESPACE_BEGIN

namespace {

struct FrameBatch {
  Tensor x;
  std::vector<int> labels;
};

FrameBatch draw_frames(std::mt19937_64& rng, const syncmnist::SpriteBank& sprites, std::size_t n) {
  std::vector<real> values;
  values.reserve(n * syncmnist::kFrameSize * syncmnist::kFrameSize);
  FrameBatch batch;
  for (std::size_t i = 0; i < n; ++i) {
    auto [pixels, label] = syncmnist::single_digit_frame(rng, sprites);
    for (float p : pixels) values.push_back(static_cast<real>(p));
    batch.labels.push_back(label);
  }
  batch.x = Tensor({n, syncmnist::kFrameSize, syncmnist::kFrameSize, 1}, std::move(values));
  return batch;
}

Tensor head_logits(const ConvBackbone& backbone, const Linear& head, const Tensor& x) {
  const Tensor maps = backbone.forward(x);
  // Global max over space: the digit covers a small part of the frame.
  const std::size_t n = maps.dim(0);
  return head(reduce(ReduceOp::max, reshape(maps, {n, maps.dim(1) * maps.dim(2), maps.dim(3)}), {1}));
}

}  // namespace

double single_digit_accuracy(const ConvBackbone& backbone, const Linear& head, const syncmnist::SpriteBank& sprites,
                             std::size_t samples, std::uint64_t seed) {
  NoGradGuard guard;
  std::mt19937_64 rng(seed);
  std::size_t correct = 0, seen = 0;
  while (seen < samples) {
    const std::size_t n = std::min<std::size_t>(64, samples - seen);
    const FrameBatch batch = draw_frames(rng, sprites, n);
    const Tensor logits = head_logits(backbone, head, batch.x);
    auto z = logits.data();
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t best = 0;
      for (std::size_t k = 1; k < 10; ++k) {
        if (z[i * 10 + k] > z[i * 10 + best]) best = k;
      }
      correct += static_cast<int>(best) == batch.labels[i];
    }
    seen += n;
  }
  return static_cast<double>(correct) / static_cast<double>(samples);
}

PretrainResult pretrain_backbone(ParameterStore& store, const ConvBackbone& backbone,
                                 const syncmnist::SpriteBank& sprites, const PretrainConfig& config) {
  ParameterStore head_store(derive_seed(config.seed, hash_name("pretrain.head")));
  const Linear head(head_store, "pretrain.head", backbone.out_channels(), 10);

  std::vector<Parameter> params;
  for (const auto& name : backbone.parameter_names()) params.push_back(store.get(name));
  for (const auto& p : head_store.parameters()) params.push_back(p);
  SgdOptimizer opt(params, {config.learning_rate, config.momentum, true});

  PretrainResult result;
  std::mt19937_64 rng(derive_seed(config.seed, 0));
  for (std::size_t step = 0; step < config.steps; ++step) {
    const FrameBatch batch = draw_frames(rng, sprites, config.batch_size);
    opt.zero_grad();
    Tensor loss;
    try {
      loss = cross_entropy(head_logits(backbone, head, batch.x), batch.labels);
    } catch (const NumericError& e) {
      throw NumericError("backbone pretraining diverged at step " + std::to_string(step) + " (seed " +
                         std::to_string(config.seed) + "): " + e.what());
    }
    backward(loss);
    opt.step();
    result.losses.push_back(loss.item());
    ++result.steps;
  }
  result.heldout_accuracy =
      single_digit_accuracy(backbone, head, sprites, config.eval_samples, derive_seed(config.seed, 1));
  return result;
}

RSTG_NAMESPACE_END
