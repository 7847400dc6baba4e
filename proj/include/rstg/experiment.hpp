// Copyright 2026 The RSTG Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "rstg/backbone.hpp"
#include "rstg/rstg_model.hpp"
#include "rstg/syncmnist.hpp"

RSTG_NAMESPACE_BEGIN

inline constexpr const char* kOutputRootEnv = "RSTG_OUTPUT_ROOT";

struct OptimizerConfig {
  double learning_rate = 1e-4;
  double momentum = 0.9;
  bool nesterov = true;
  double decay_factor = 10.0;
  std::size_t patience = 5;       // evals without improvement before a decay
  double min_improvement = 0.1;   // accuracy points
};

struct DataConfig {
  std::size_t train_videos = 20000;
  std::size_t val_videos = 2000;
  std::size_t test_videos = 2000;
  std::uint64_t seed = 1;
  syncmnist::GeneratorConfig generator;
  std::string sprites = "procedural";  // or "idx"
  std::string idx_images, idx_labels;
  std::size_t sprite_variants = 4;
  std::string dataset_dir;  // load <dir>/<split>.{bin,json} when present
};

enum class BackboneMode { finetune, frozen };

struct ExperimentConfig {
  std::string model = "rstg";  // rstg | mean-lstm | conv-lstm
  RstgConfig rstg;
  BackboneConfig backbone;
  BaselineConfig baseline;
  PretrainConfig pretrain;
  OptimizerConfig optimizer;
  DataConfig data;
  BackboneMode backbone_mode = BackboneMode::finetune;
  std::string backbone_checkpoint;  // empty: pretrain inline
  std::size_t batch_size = 32;
  std::size_t max_steps = 2000;
  std::size_t eval_interval = 100;
  std::size_t eval_videos = 0;  // 0: whole eval split
  std::string eval_split = "val";  // "train" scores the training subset (overfit runs)
  std::uint64_t seed = 0;
  std::string output_dir = "run";
  std::size_t checkpoint_interval = 0;  // 0: only best/last
  double target_accuracy = 0;           // stop once an eval reaches it; 0: off

  void validate() const;
};

nlohmann::json to_json(const ExperimentConfig& c);
ExperimentConfig experiment_from_json(const nlohmann::json& j);

/// Sets a dotted key ("rstg.iterations", "optimizer.learning_rate") in a
/// config JSON. The value is parsed as JSON when possible, otherwise taken as
/// a string.
void apply_override(nlohmann::json& config, const std::string& key, const std::string& value);
/// Applies "--key=value" / "key=value" items in order.
void apply_overrides(nlohmann::json& config, const std::vector<std::string>& items);

ExperimentConfig load_experiment(const std::filesystem::path& file, const std::vector<std::string>& overrides);

/// $RSTG_OUTPUT_ROOT/<dir> for relative dirs, <dir> otherwise.
std::filesystem::path resolve_output(const std::string& dir);

syncmnist::SpriteBank load_sprites(const DataConfig& data);

RSTG_NAMESPACE_END
