// Copyright 2026 The RSTG Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include <stdexcept>

#include "rstg/backbone.hpp"
#include "rstg/nn_ops.hpp"

RSTG_NAMESPACE_BEGIN

BaselineKind parse_baseline(const std::string& s) {
  if (s == "mean-lstm") return BaselineKind::mean_lstm;
  if (s == "conv-lstm") return BaselineKind::conv_lstm;
  throw std::invalid_argument("unknown baseline '" + s + "' (mean-lstm|conv-lstm)");
}

std::string to_string(BaselineKind k) { return k == BaselineKind::mean_lstm ? "mean-lstm" : "conv-lstm"; }

nlohmann::json to_json(const BaselineConfig& c) {
  return {{"kind", to_string(c.kind)}, {"hidden", c.hidden}, {"conv_widths", c.conv_widths}, {"bn_momentum", c.bn_momentum}};
}

BaselineConfig baseline_config_from_json(const nlohmann::json& j, const BaselineConfig& base) {
  BaselineConfig c = base;
  for (const auto& [key, value] : j.items()) {
    if (key == "kind") c.kind = parse_baseline(value.get<std::string>());
    else if (key == "hidden") c.hidden = value.get<std::size_t>();
    else if (key == "conv_widths") c.conv_widths = value.get<std::vector<std::size_t>>();
    else if (key == "bn_momentum") c.bn_momentum = value.get<double>();
    else throw std::invalid_argument("unknown baseline field '" + key + "'");
  }
  return c;
}

Baseline::Baseline(ParameterStore& store, BaselineConfig config, std::size_t input_channels, const std::string& prefix)
    : config_(std::move(config)), input_channels_(input_channels) {
  std::size_t width = input_channels;
  if (config_.kind == BaselineKind::conv_lstm) {
    for (std::size_t l = 0; l < config_.conv_widths.size(); ++l) {
      const std::size_t out = config_.conv_widths[l];
      const std::string name = prefix + ".conv" + std::to_string(l + 1);
      kernels_.push_back(store.create(name + ".w", {3, 3, width, out}, 9 * width));
      gammas_.push_back(store.create_constant(name + ".bn.gamma", {out}, real(1)));
      betas_.push_back(store.create_constant(name + ".bn.beta", {out}, real(0)));
      running_means_.push_back(store.create_constant(name + ".bn.mean", {out}, real(0), false));
      running_vars_.push_back(store.create_constant(name + ".bn.var", {out}, real(1), false));
      width = out;
    }
  }
  lstm_ = LstmCell(store, prefix + ".lstm", width, config_.hidden);
}

Tensor Baseline::frame_features(const Tensor& frame, const FeatureVolume& fv, bool training) {
  if (config_.kind == BaselineKind::mean_lstm) return spatial_mean(frame, fv.batch);
  Tensor h = reshape(frame, {fv.batch, fv.height, fv.width, fv.channels});
  for (std::size_t l = 0; l < kernels_.size(); ++l) {
    h = relu(batch_norm(conv2d(h, kernels_[l]), gammas_[l], betas_[l], running_means_[l], running_vars_[l], training,
                        static_cast<real>(config_.bn_momentum)));
  }
  return spatial_mean(reshape(h, {fv.batch * fv.height * fv.width, h.dim(3)}), fv.batch);
}

Tensor Baseline::forward(const FeatureVolume& features, bool training) {
  features.validate();
  if (features.channels != input_channels_) {
    throw ShapeError("baseline: feature volume has " + std::to_string(features.channels) + " channels, expected " +
                     std::to_string(input_channels_));
  }
  LstmState state = lstm_.zero_state(features.batch);
  for (const Tensor& frame : features.frames) state = lstm_(frame_features(frame, features, training), state);
  return state.h;
}

RSTG_NAMESPACE_END
