// Copyright 2026 The RSTG Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rstg/classifier.hpp"

RSTG_NAMESPACE_BEGIN

struct LrEvent {
  std::size_t step = 0;
  double from = 0, to = 0;
  std::size_t window_first = 0, window_last = 0;  // eval steps without improvement
};

/// Decays the rate when accuracy has not improved by `min_improvement`
/// points over the best for `patience` consecutive evals.
class PlateauSchedule {
 public:
  explicit PlateauSchedule(const OptimizerConfig& config) : config_(config), lr_(config.learning_rate) {}

  /// Records an eval (accuracy as a fraction). Returns true if the rate decayed.
  bool observe(std::size_t step, double accuracy);
  double learning_rate() const { return lr_; }
  const std::vector<LrEvent>& events() const { return events_; }

 private:
  OptimizerConfig config_;
  double lr_;
  double best_ = -1;
  std::vector<std::size_t> stale_;
  std::vector<LrEvent> events_;
};

struct EvalResult {
  std::size_t count = 0, correct = 0;
  double accuracy = 0;
  std::vector<std::vector<std::size_t>> confusion;  // [true][predicted]

  nlohmann::json to_json() const;
  /// <dir>/eval_<tag>.json and <dir>/confusion_<tag>.csv
  void write(const std::filesystem::path& dir, const std::string& tag) const;
};

EvalResult score_predictions(std::span<const int> labels, std::span<const int> predicted, std::size_t classes);

/// Scores the classifier on a cached or raw split (first `limit` videos, 0 = all).
EvalResult evaluate_split(VideoClassifier& model, const VideoSplit* split, const FeatureCache* cache, std::size_t limit,
                          std::size_t batch_size = 64);

struct TrainInputs {
  std::shared_ptr<const syncmnist::SpriteBank> sprites;
  std::shared_ptr<const FeatureCache> train_cache, eval_cache;
};

struct TrainResult {
  std::size_t steps = 0;
  double best_accuracy = -1;
  std::size_t best_step = 0;
  double final_accuracy = 0;
  double final_loss = 0;
  std::vector<double> losses;
  std::vector<std::pair<std::size_t, double>> evals;
  std::vector<LrEvent> lr_events;
  double wall_seconds = 0;
  std::filesystem::path best_checkpoint, last_checkpoint;
  nlohmann::json report;
};

/// Prepares the backbone per config: loads `backbone_checkpoint`, or pretrains
/// when pretrain.steps > 0 and saves <out>/backbone.ckpt. Returns a JSON note.
nlohmann::json init_backbone(VideoClassifier& model, const syncmnist::SpriteBank& sprites,
                             const std::filesystem::path& out_dir, std::ostream* log);

/// Full training run writing metrics.csv, report.json and checkpoints to out_dir.
TrainResult train(const ExperimentConfig& config, const std::filesystem::path& out_dir, const TrainInputs& inputs = {},
                  std::ostream* log = nullptr);

/// Loads a checkpoint written by train() and scores a split.
EvalResult evaluate_checkpoint(const std::filesystem::path& checkpoint, const std::string& split,
                               const std::vector<std::string>& overrides, const std::filesystem::path& out_dir,
                               std::ostream* log = nullptr);

struct AblationVariant {
  std::string name;
  nlohmann::json rstg;  // overrides applied to the base rstg section
};

/// space-only, time-only, homogeneous, 1-temp, all-temp, positional all-temp.
std::vector<AblationVariant> default_ablation_variants();
/// Also knows "full-adjacency" and "4-connectivity".
AblationVariant ablation_variant(const std::string& name);

struct AblationEntry {
  std::string name;
  bool ok = false;
  std::string error;
  double accuracy = 0;
  std::size_t best_step = 0;
  double seconds = 0;
};

struct AblationReport {
  std::vector<AblationEntry> entries;
  nlohmann::json checks;  // ordering claims with pass/fail
  nlohmann::json to_json() const;
};

nlohmann::json ablation_checks(const std::vector<AblationEntry>& entries);

AblationReport run_ablation_suite(const ExperimentConfig& base, const std::filesystem::path& out_dir,
                                  const std::vector<AblationVariant>& variants, std::ostream* log = nullptr);

RSTG_NAMESPACE_END
