// Copyright 2026 The RSTG Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "rstg/feature_volume.hpp"
#include "rstg/layers.hpp"
#include "rstg/syncmnist.hpp"

RSTG_NAMESPACE_BEGIN

struct BackboneConfig {
  std::vector<std::size_t> widths{32, 64, 128};
  std::size_t in_channels = 1;
};

nlohmann::json to_json(const BackboneConfig& c);
BackboneConfig backbone_config_from_json(const nlohmann::json& j, const BackboneConfig& base = {});

/// conv3x3 -> relu -> maxpool2, once per width.
class ConvBackbone {
 public:
  ConvBackbone(ParameterStore& store, BackboneConfig config, const std::string& prefix = "backbone");

  /// x: [M, H, W, Cin] -> [M, H / 2^L, W / 2^L, widths.back()].
  Tensor forward(const Tensor& x) const;
  /// Per-frame features of a batch of videos.
  FeatureVolume extract(std::span<const syncmnist::VideoSample* const> videos) const;

  const BackboneConfig& config() const { return config_; }
  std::size_t out_channels() const { return config_.widths.back(); }
  std::size_t downsample() const { return std::size_t{1} << config_.widths.size(); }
  std::vector<std::string> parameter_names() const;

 private:
  BackboneConfig config_;
  std::string prefix_;
  std::vector<Tensor> kernels_, biases_;
};

/// All frames of the batch stacked time-major: [T*B, H, W, 1].
Tensor video_frames(std::span<const syncmnist::VideoSample* const> videos);
/// Splits time-major per-frame maps [T*B, h, w, C] into a feature volume.
FeatureVolume to_volume(const Tensor& maps, std::size_t batch, std::size_t time);
/// Global average over space of one [B*h*w, C] frame -> [B, C].
Tensor spatial_mean(const Tensor& frame, std::size_t batch);

struct PretrainConfig {
  std::size_t steps = 400;
  std::size_t batch_size = 32;
  double learning_rate = 0.05;
  double momentum = 0.9;
  std::uint64_t seed = 11;
  std::size_t eval_samples = 500;
};

struct PretrainResult {
  std::vector<double> losses;
  double heldout_accuracy = 0;
  std::size_t steps = 0;
};

/// 10-way digit classification of single-digit frames. The temporary head
/// lives in its own store and is discarded. Throws NumericError with the seed
/// and step if the loss diverges.
PretrainResult pretrain_backbone(ParameterStore& store, const ConvBackbone& backbone,
                                 const syncmnist::SpriteBank& sprites, const PretrainConfig& config);

/// Accuracy of a fresh head is not meaningful; this scores the frozen backbone
/// with the given head on held-out frames.
double single_digit_accuracy(const ConvBackbone& backbone, const Linear& head, const syncmnist::SpriteBank& sprites,
                             std::size_t samples, std::uint64_t seed);

enum class BaselineKind { mean_lstm, conv_lstm };
BaselineKind parse_baseline(const std::string& s);
std::string to_string(BaselineKind k);

struct BaselineConfig {
  BaselineKind kind = BaselineKind::mean_lstm;
  std::size_t hidden = 64;                      // LSTM width
  std::vector<std::size_t> conv_widths{64, 64, 64};  // Conv+LSTM extra layers
  double bn_momentum = 0.9;
};

nlohmann::json to_json(const BaselineConfig& c);
BaselineConfig baseline_config_from_json(const nlohmann::json& j, const BaselineConfig& base = {});

/// Mean+LSTM and Conv+LSTM over a feature volume; forward returns the final
/// LSTM hidden state [B, hidden].
class Baseline {
 public:
  Baseline(ParameterStore& store, BaselineConfig config, std::size_t input_channels,
           const std::string& prefix = "baseline");

  Tensor forward(const FeatureVolume& features, bool training);
  std::size_t output_width() const { return config_.hidden; }
  const BaselineConfig& config() const { return config_; }

 private:
  Tensor frame_features(const Tensor& frame, const FeatureVolume& shape, bool training);

  BaselineConfig config_;
  std::size_t input_channels_;
  std::vector<Tensor> kernels_, gammas_, betas_, running_means_, running_vars_;
  LstmCell lstm_;
};

RSTG_NAMESPACE_END
