// Copyright 2026 The RSTG Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "rstg/experiment.hpp"

RSTG_NAMESPACE_BEGIN

/// Backbone + (RSTG | baseline) + linear head over the 46-class taxonomy.
class VideoClassifier {
 public:
  explicit VideoClassifier(const ExperimentConfig& config);

  /// Backbone features; differentiable w.r.t. the backbone unless frozen.
  FeatureVolume features(std::span<const syncmnist::VideoSample* const> videos) const;
  /// [B, 46] logits.
  Tensor logits(const FeatureVolume& features, bool training);

  ParameterStore& store() { return store_; }
  const ParameterStore& store() const { return store_; }
  const ConvBackbone& backbone() const { return *backbone_; }
  RstgModel* rstg() { return rstg_.get(); }
  const ExperimentConfig& config() const { return config_; }
  std::size_t num_classes() const { return syncmnist::kNumClasses; }
  /// Parameters the optimizer updates (backbone excluded when frozen).
  std::vector<Parameter> trainable_parameters() const;
  /// Loads backbone weights from a checkpoint (other entries are ignored).
  void load_backbone(const std::filesystem::path& checkpoint);

 private:
  ExperimentConfig config_;
  ParameterStore store_;
  std::unique_ptr<ConvBackbone> backbone_;
  std::unique_ptr<RstgModel> rstg_;
  std::unique_ptr<Baseline> baseline_;
  Linear head_;
};

/// A split either materialized from disk or generated on demand by index.
class VideoSplit {
 public:
  VideoSplit(syncmnist::DatasetSpec spec, std::shared_ptr<const syncmnist::SpriteBank> sprites);
  explicit VideoSplit(syncmnist::Dataset loaded);

  std::size_t size() const;
  syncmnist::VideoSample sample(std::size_t index) const;
  const syncmnist::DatasetSpec& spec() const { return spec_; }

 private:
  syncmnist::DatasetSpec spec_;
  std::shared_ptr<const syncmnist::SpriteBank> sprites_;
  std::optional<syncmnist::Dataset> loaded_;
};

/// Backbone features of a whole split, stored video-major as [n][t][y][x][c].
struct FeatureCache {
  std::size_t time = 0, height = 0, width = 0, channels = 0;
  std::vector<float> values;
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
  FeatureVolume batch(std::span<const std::size_t> indices) const;
};

FeatureCache cache_features(const ConvBackbone& backbone, const VideoSplit& split, std::size_t chunk = 32);

/// Opens the split named by `name` (train|val|test) of the experiment's data,
/// from data.dataset_dir when it holds that split, else by generation.
VideoSplit open_split(const ExperimentConfig& config, const std::string& name,
                      std::shared_ptr<const syncmnist::SpriteBank> sprites);

/// argmax per row of [B, K] logits.
std::vector<int> predictions(const Tensor& logits);

RSTG_NAMESPACE_END
