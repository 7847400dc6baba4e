// Copyright 2026 The RSTG Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <chrono>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "rstg/checkpoint.hpp"
#include "rstg/complexity.hpp"
#include "rstg/nn_ops.hpp"
#include "rstg/random.hpp"
#include "rstg/training.hpp"

RSTG_NAMESPACE_BEGIN

bool PlateauSchedule::observe(std::size_t step, double accuracy) {
  if (accuracy >= best_ + config_.min_improvement / 100.0) {
    best_ = accuracy;
    stale_.clear();
    return false;
  }
  stale_.push_back(step);
  if (stale_.size() < config_.patience) return false;
  const double next = lr_ / config_.decay_factor;
  events_.push_back({step, lr_, next, stale_.front(), stale_.back()});
  lr_ = next;
  stale_.clear();
  return true;
}

nlohmann::json init_backbone(VideoClassifier& model, const syncmnist::SpriteBank& sprites,
                             const std::filesystem::path& out_dir, std::ostream* log) {
  const ExperimentConfig& cfg = model.config();
  if (!cfg.backbone_checkpoint.empty()) {
    model.load_backbone(cfg.backbone_checkpoint);
    return {{"source", "checkpoint"}, {"path", cfg.backbone_checkpoint}};
  }
  if (cfg.pretrain.steps == 0) return {{"source", "random-init"}};
  if (log) *log << "pretraining backbone for " << cfg.pretrain.steps << " steps\n";
  const PretrainResult pr = pretrain_backbone(model.store(), model.backbone(), sprites, cfg.pretrain);
  ParameterStore only_backbone;
  for (const auto& name : model.backbone().parameter_names()) {
    const Tensor& t = model.store().tensor(name);
    only_backbone.create_constant(name, t.shape(), real(0));
  }
  only_backbone.copy_values_from(model.store());
  const auto path = out_dir / "backbone.ckpt";
  save_checkpoint(only_backbone, path, {{"heldout_accuracy", pr.heldout_accuracy}, {"steps", pr.steps}});
  if (log) *log << "backbone held-out digit accuracy " << pr.heldout_accuracy << "\n";
  return {{"source", "pretrained"},
          {"path", path.string()},
          {"heldout_accuracy", pr.heldout_accuracy},
          {"final_loss", pr.losses.empty() ? 0.0 : pr.losses.back()}};
}

TrainResult train(const ExperimentConfig& config, const std::filesystem::path& out_dir, const TrainInputs& inputs,
                  std::ostream* log) {
  config.validate();
  const auto started = std::chrono::steady_clock::now();
  std::filesystem::create_directories(out_dir);
  {
    std::ofstream cfg(out_dir / "config.json");
    cfg << to_json(config).dump(2) << '\n';
  }

  auto sprites = inputs.sprites ? inputs.sprites : std::make_shared<const syncmnist::SpriteBank>(load_sprites(config.data));
  VideoClassifier model(config);
  const nlohmann::json backbone_note = init_backbone(model, *sprites, out_dir, log);

  const VideoSplit train_split = open_split(config, "train", sprites);
  const VideoSplit eval_split = open_split(config, config.eval_split, sprites);
  const bool frozen = config.backbone_mode == BackboneMode::frozen;
  std::shared_ptr<const FeatureCache> train_cache = inputs.train_cache, eval_cache = inputs.eval_cache;
  if (frozen && !train_cache) {
    if (log) *log << "caching backbone features for " << train_split.size() << " training videos\n";
    train_cache = std::make_shared<const FeatureCache>(cache_features(model.backbone(), train_split));
  }
  if (frozen && !eval_cache) {
    eval_cache = config.eval_split == "train" ? train_cache
                                              : std::make_shared<const FeatureCache>(cache_features(model.backbone(), eval_split));
  }
  const std::size_t n_train = frozen ? train_cache->size() : train_split.size();

  SgdOptimizer opt(model.trainable_parameters(),
                   {config.optimizer.learning_rate, config.optimizer.momentum, config.optimizer.nesterov});
  PlateauSchedule schedule(config.optimizer);

  std::ofstream metrics(out_dir / "metrics.csv", std::ios::trunc);
  metrics << "step,loss,val_acc\n";
  std::ostringstream pending;

  TrainResult result;
  std::mt19937_64 rng(derive_seed(config.seed, hash_name("batches")));
  std::vector<std::size_t> order(n_train);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::size_t cursor = n_train;
  const std::size_t bs = std::min(config.batch_size, n_train);

  auto save = [&](const std::filesystem::path& path, std::size_t step, double acc) {
    save_checkpoint(model.store(), path, {{"step", step}, {"accuracy", acc}, {"config", to_json(config)}});
  };

  for (std::size_t step = 1; step <= config.max_steps; ++step) {
    std::vector<std::size_t> idx;
    while (idx.size() < bs) {
      if (cursor == n_train) {
        std::shuffle(order.begin(), order.end(), rng);
        cursor = 0;
      }
      idx.push_back(order[cursor++]);
    }
    FeatureVolume fv;
    std::vector<int> labels;
    if (frozen) {
      fv = train_cache->batch(idx);
      for (std::size_t i : idx) labels.push_back(train_cache->labels[i]);
    } else {
      std::vector<syncmnist::VideoSample> videos;
      for (std::size_t i : idx) videos.push_back(train_split.sample(i));
      std::vector<const syncmnist::VideoSample*> ptrs;
      for (const auto& v : videos) {
        ptrs.push_back(&v);
        labels.push_back(v.label);
      }
      fv = model.features(ptrs);
    }
    opt.zero_grad();
    Tensor loss;
    try {
      loss = cross_entropy(model.logits(fv, true), labels);
      backward(loss);
    } catch (const NumericError& e) {
      throw NumericError("training diverged at step " + std::to_string(step) + " (seed " + std::to_string(config.seed) +
                         "): " + e.what());
    }
    opt.step();
    result.losses.push_back(loss.item());
    result.steps = step;
    pending << step << ',' << loss.item() << ',';

    const bool eval_now = step % config.eval_interval == 0 || step == config.max_steps;
    if (eval_now) {
      const EvalResult ev = evaluate_split(model, frozen ? nullptr : &eval_split, frozen ? eval_cache.get() : nullptr,
                                           config.eval_videos);
      result.evals.emplace_back(step, ev.accuracy);
      pending << ev.accuracy;
      if (ev.accuracy > result.best_accuracy) {
        result.best_accuracy = ev.accuracy;
        result.best_step = step;
        result.best_checkpoint = out_dir / "best.ckpt";
        save(result.best_checkpoint, step, ev.accuracy);
      }
      if (schedule.observe(step, ev.accuracy)) {
        opt.set_learning_rate(schedule.learning_rate());
        if (log) *log << "step " << step << ": learning rate -> " << schedule.learning_rate() << "\n";
      }
      if (log) *log << "step " << step << " loss " << loss.item() << " " << config.eval_split << "_acc " << ev.accuracy << "\n";
    }
    pending << '\n';
    if (eval_now) {
      metrics << pending.str();
      metrics.flush();
      pending.str("");
    }
    if (config.checkpoint_interval && step % config.checkpoint_interval == 0) {
      save(out_dir / ("step_" + std::to_string(step) + ".ckpt"), step, result.evals.empty() ? 0.0 : result.evals.back().second);
    }
    if (eval_now && config.target_accuracy > 0 && result.evals.back().second >= config.target_accuracy) {
      if (log) *log << "target accuracy reached at step " << step << "\n";
      break;
    }
  }
  metrics << pending.str();
  metrics.flush();

  result.final_accuracy = result.evals.empty() ? 0.0 : result.evals.back().second;
  result.final_loss = result.losses.empty() ? 0.0 : result.losses.back();
  result.lr_events = schedule.events();
  result.last_checkpoint = out_dir / "last.ckpt";
  save(result.last_checkpoint, result.steps, result.final_accuracy);
  result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

  nlohmann::json events = nlohmann::json::array();
  for (const auto& e : result.lr_events) {
    events.push_back({{"step", e.step}, {"from", e.from}, {"to", e.to}, {"window", {e.window_first, e.window_last}}});
  }
  nlohmann::json report = {{"seed", config.seed},
                           {"precision", kPrecisionName},
                           {"config", to_json(config)},
                           {"backbone", backbone_note},
                           {"train_videos", n_train},
                           {"steps", result.steps},
                           {"reached_target", config.target_accuracy > 0 && result.best_accuracy >= config.target_accuracy},
                           {"best_accuracy", result.best_accuracy},
                           {"best_step", result.best_step},
                           {"final_accuracy", result.final_accuracy},
                           {"final_loss", result.final_loss},
                           {"eval_split", config.eval_split},
                           {"lr_events", events},
                           {"final_learning_rate", schedule.learning_rate()},
                           {"trainable_parameters", model.store().trainable_count()},
                           {"best_checkpoint", result.best_checkpoint.string()},
                           {"last_checkpoint", result.last_checkpoint.string()},
                           {"wall_seconds", result.wall_seconds}};
  if (RstgModel* r = model.rstg()) {
    const auto measured = complexity_measured(*r, config.data.generator.frames);
    report["messages_per_video"] = measured.to_json();
  }
  result.report = report;
  std::ofstream(out_dir / "report.json") << report.dump(2) << '\n';
  return result;
}

RSTG_NAMESPACE_END
