// Copyright 2026 The RSTG Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "rstg/classifier.hpp"

#include "rstg/checkpoint.hpp"

RSTG_NAMESPACE_BEGIN

VideoClassifier::VideoClassifier(const ExperimentConfig& config) : config_(config), store_(config.seed) {
  config_.validate();
  backbone_ = std::make_unique<ConvBackbone>(store_, config_.backbone);
  const std::size_t C = backbone_->out_channels();
  std::size_t head_in = 0;
  if (config_.model == "rstg") {
    rstg_ = std::make_unique<RstgModel>(store_, config_.rstg, C);
    head_in = config_.rstg.aggregation == Aggregation::to_vec ? config_.rstg.dim : C;
  } else {
    BaselineConfig bc = config_.baseline;
    bc.kind = parse_baseline(config_.model);
    baseline_ = std::make_unique<Baseline>(store_, bc, C);
    head_in = baseline_->output_width();
  }
  head_ = Linear(store_, "head", head_in, syncmnist::kNumClasses);
}

FeatureVolume VideoClassifier::features(std::span<const syncmnist::VideoSample* const> videos) const {
  if (config_.backbone_mode == BackboneMode::frozen) {
    NoGradGuard guard;
    return backbone_->extract(videos);
  }
  return backbone_->extract(videos);
}

Tensor VideoClassifier::logits(const FeatureVolume& features, bool training) {
  if (baseline_) return head_(baseline_->forward(features, training));
  RstgOutput out = rstg_->forward(features);
  if (config_.rstg.aggregation == Aggregation::to_vec) return head_(out.vec);
  // to-map: global average over time and space, then the head.
  Tensor pooled;
  for (const Tensor& frame : out.map.frames) {
    const Tensor m = spatial_mean(frame, features.batch);
    pooled = pooled.defined() ? add(pooled, m) : m;
  }
  return head_(scale(pooled, real(1) / static_cast<real>(out.map.frames.size())));
}

std::vector<Parameter> VideoClassifier::trainable_parameters() const {
  std::vector<Parameter> out;
  const bool frozen = config_.backbone_mode == BackboneMode::frozen;
  for (const Parameter& p : store_.parameters()) {
    if (!p.trainable) continue;
    if (frozen && p.name.rfind("backbone.", 0) == 0) continue;
    out.push_back(p);
  }
  return out;
}

void VideoClassifier::load_backbone(const std::filesystem::path& checkpoint) {
  const Checkpoint ckpt = read_checkpoint(checkpoint);
  std::size_t loaded = 0;
  for (const CheckpointEntry& e : ckpt.entries) {
    if (e.name.rfind("backbone.", 0) != 0) continue;
    if (!store_.contains(e.name)) throw CheckpointError("backbone checkpoint has unknown entry '" + e.name + "'");
    Tensor t = store_.tensor(e.name);
    if (t.shape() != e.shape) {
      throw CheckpointError("backbone entry '" + e.name + "' has shape " + shape_to_string(e.shape) + ", expected " +
                            shape_to_string(t.shape()));
    }
    auto dst = t.mutable_data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = static_cast<real>(e.values[i]);
    ++loaded;
  }
  if (loaded != backbone_->parameter_names().size()) {
    throw CheckpointError("backbone checkpoint " + checkpoint.string() + " holds " + std::to_string(loaded) + " of " +
                          std::to_string(backbone_->parameter_names().size()) + " backbone tensors");
  }
}

std::vector<int> predictions(const Tensor& logits) {
  const std::size_t B = logits.dim(0), K = logits.dim(1);
  auto z = logits.data();
  std::vector<int> out(B);
  for (std::size_t b = 0; b < B; ++b) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < K; ++k) {
      if (z[b * K + k] > z[b * K + best]) best = k;
    }
    out[b] = static_cast<int>(best);
  }
  return out;
}

RSTG_NAMESPACE_END
