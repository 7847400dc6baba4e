// Copyright 2026 The RSTG Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <stdexcept>

#include "rstg/classifier.hpp"

RSTG_NAMESPACE_BEGIN

VideoSplit::VideoSplit(syncmnist::DatasetSpec spec, std::shared_ptr<const syncmnist::SpriteBank> sprites)
    : spec_(std::move(spec)), sprites_(std::move(sprites)) {
  if (!sprites_) throw std::invalid_argument("VideoSplit needs a sprite bank");
  spec_.generator.validate();
}

VideoSplit::VideoSplit(syncmnist::Dataset loaded) : spec_(loaded.spec), loaded_(std::move(loaded)) {}

std::size_t VideoSplit::size() const { return loaded_ ? loaded_->samples.size() : spec_.num_videos; }

syncmnist::VideoSample VideoSplit::sample(std::size_t index) const {
  if (index >= size()) throw std::out_of_range("video index " + std::to_string(index) + " out of range");
  if (loaded_) return loaded_->samples[index];
  return syncmnist::generate_sample(spec_.generator, *sprites_, spec_.seed, spec_.split, index);
}

VideoSplit open_split(const ExperimentConfig& config, const std::string& name,
                      std::shared_ptr<const syncmnist::SpriteBank> sprites) {
  const syncmnist::Split split = syncmnist::parse_split(name);
  if (!config.data.dataset_dir.empty()) {
    const auto stem = std::filesystem::path(config.data.dataset_dir) / name;
    if (std::filesystem::exists(stem.string() + ".json")) return VideoSplit(syncmnist::load_dataset(stem));
  }
  syncmnist::DatasetSpec spec;
  spec.seed = config.data.seed;
  spec.split = split;
  spec.generator = config.data.generator;
  spec.num_videos = split == syncmnist::Split::train ? config.data.train_videos
                    : split == syncmnist::Split::val ? config.data.val_videos
                                                     : config.data.test_videos;
  return VideoSplit(spec, std::move(sprites));
}

FeatureVolume FeatureCache::batch(std::span<const std::size_t> indices) const {
  FeatureVolume fv;
  fv.batch = indices.size();
  fv.time = time;
  fv.height = height;
  fv.width = width;
  fv.channels = channels;
  const std::size_t plane = height * width * channels;
  for (std::size_t t = 0; t < time; ++t) {
    std::vector<real> v(fv.batch * plane);
    for (std::size_t b = 0; b < fv.batch; ++b) {
      const float* src = values.data() + (indices[b] * time + t) * plane;
      std::copy(src, src + plane, v.begin() + static_cast<std::ptrdiff_t>(b * plane));
    }
    fv.frames.emplace_back(Shape{fv.batch * height * width, channels}, std::move(v));
  }
  return fv;
}

FeatureCache cache_features(const ConvBackbone& backbone, const VideoSplit& split, std::size_t chunk) {
  NoGradGuard guard;
  FeatureCache cache;
  const std::size_t n = split.size();
  for (std::size_t start = 0; start < n; start += chunk) {
    std::vector<syncmnist::VideoSample> videos;
    for (std::size_t i = start; i < std::min(n, start + chunk); ++i) videos.push_back(split.sample(i));
    std::vector<const syncmnist::VideoSample*> ptrs;
    for (const auto& v : videos) ptrs.push_back(&v);
    const FeatureVolume fv = backbone.extract(ptrs);
    if (start == 0) {
      cache.time = fv.time;
      cache.height = fv.height;
      cache.width = fv.width;
      cache.channels = fv.channels;
      cache.values.reserve(n * fv.time * fv.height * fv.width * fv.channels);
    }
    const std::size_t plane = fv.height * fv.width * fv.channels;
    const std::size_t offset = cache.values.size();
    cache.values.resize(offset + ptrs.size() * fv.time * plane);
    for (std::size_t t = 0; t < fv.time; ++t) {
      auto src = fv.frames[t].data();
      for (std::size_t b = 0; b < ptrs.size(); ++b) {
        std::copy(src.begin() + static_cast<std::ptrdiff_t>(b * plane),
                  src.begin() + static_cast<std::ptrdiff_t>((b + 1) * plane),
                  cache.values.begin() + static_cast<std::ptrdiff_t>(offset + (b * fv.time + t) * plane));
      }
    }
    for (const auto& v : videos) cache.labels.push_back(v.label);
  }
  return cache;
}

RSTG_NAMESPACE_END
