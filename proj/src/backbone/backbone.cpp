// Copyright 2026 The RSTG Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "rstg/backbone.hpp"

#include <stdexcept>

#include "rstg/nn_ops.hpp"

RSTG_NAMESPACE_BEGIN

nlohmann::json to_json(const BackboneConfig& c) { return {{"widths", c.widths}, {"in_channels", c.in_channels}}; }

BackboneConfig backbone_config_from_json(const nlohmann::json& j, const BackboneConfig& base) {
  BackboneConfig c = base;
  for (const auto& [key, value] : j.items()) {
    if (key == "widths") c.widths = value.get<std::vector<std::size_t>>();
    else if (key == "in_channels") c.in_channels = value.get<std::size_t>();
    else throw std::invalid_argument("unknown backbone field '" + key + "'");
  }
  return c;
}

ConvBackbone::ConvBackbone(ParameterStore& store, BackboneConfig config, const std::string& prefix)
    : config_(std::move(config)), prefix_(prefix) {
  if (config_.widths.empty()) throw std::invalid_argument("backbone needs at least one layer");
  std::size_t cin = config_.in_channels;
  for (std::size_t l = 0; l < config_.widths.size(); ++l) {
    const std::size_t cout = config_.widths[l];
    if (cout == 0) throw std::invalid_argument("backbone widths must be positive");
    const std::string name = prefix + ".conv" + std::to_string(l + 1);
    kernels_.push_back(store.create(name + ".w", {3, 3, cin, cout}, 9 * cin));
    biases_.push_back(store.create(name + ".b", {cout}, 9 * cin));
    cin = cout;
  }
}

std::vector<std::string> ConvBackbone::parameter_names() const {
  std::vector<std::string> out;
  for (std::size_t l = 0; l < kernels_.size(); ++l) {
    const std::string name = prefix_ + ".conv" + std::to_string(l + 1);
    out.push_back(name + ".w");
    out.push_back(name + ".b");
  }
  return out;
}

Tensor ConvBackbone::forward(const Tensor& x) const {
  Tensor h = x;
  for (std::size_t l = 0; l < kernels_.size(); ++l) h = max_pool2d(relu(conv2d(h, kernels_[l], biases_[l])), 2);
  return h;
}

Tensor video_frames(std::span<const syncmnist::VideoSample* const> videos) {
  if (videos.empty()) throw std::invalid_argument("video_frames: empty batch");
  const auto& first = *videos.front();
  const std::size_t B = videos.size(), T = first.frames, H = first.height, W = first.width;
  std::vector<real> values(T * B * H * W);
  for (std::size_t b = 0; b < B; ++b) {
    const auto& v = *videos[b];
    if (v.frames != T || v.height != H || v.width != W) throw ShapeError("video_frames: videos differ in shape");
    for (std::size_t t = 0; t < T; ++t) {
      const float* src = v.pixels.data() + t * H * W;
      real* dst = values.data() + (t * B + b) * H * W;
      for (std::size_t p = 0; p < H * W; ++p) dst[p] = static_cast<real>(src[p]);
    }
  }
  return Tensor({T * B, H, W, 1}, std::move(values));
}

FeatureVolume to_volume(const Tensor& maps, std::size_t batch, std::size_t time) {
  if (maps.rank() != 4 || maps.dim(0) != batch * time) {
    throw ShapeError("to_volume: expected [T*B, h, w, C], got " + shape_to_string(maps.shape()));
  }
  FeatureVolume fv;
  fv.batch = batch;
  fv.time = time;
  fv.height = maps.dim(1);
  fv.width = maps.dim(2);
  fv.channels = maps.dim(3);
  const std::size_t rows = batch * fv.height * fv.width;
  const Tensor flat = reshape(maps, {time * rows, fv.channels});
  for (std::size_t t = 0; t < time; ++t) fv.frames.push_back(time == 1 ? flat : slice(flat, 0, t * rows, (t + 1) * rows));
  return fv;
}

FeatureVolume ConvBackbone::extract(std::span<const syncmnist::VideoSample* const> videos) const {
  return to_volume(forward(video_frames(videos)), videos.size(), videos.front()->frames);
}

Tensor spatial_mean(const Tensor& frame, std::size_t batch) {
  const std::size_t C = frame.dim(1);
  return reduce(ReduceOp::mean, reshape(frame, {batch, frame.dim(0) / batch, C}), {1});
}

RSTG_NAMESPACE_END
