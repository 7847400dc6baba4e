// Copyright 2026 The RSTG Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include <fstream>
#include <numeric>

#include "rstg/checkpoint.hpp"
#include "rstg/training.hpp"

RSTG_NAMESPACE_BEGIN

nlohmann::json EvalResult::to_json() const {
  std::vector<std::size_t> per_class(confusion.size());
  for (std::size_t c = 0; c < confusion.size(); ++c) {
    per_class[c] = std::accumulate(confusion[c].begin(), confusion[c].end(), std::size_t{0});
  }
  return {{"count", count}, {"correct", correct}, {"accuracy", accuracy}, {"class_counts", per_class},
          {"confusion", confusion}};
}

void EvalResult::write(const std::filesystem::path& dir, const std::string& tag) const {
  std::filesystem::create_directories(dir);
  std::ofstream(dir / ("eval_" + tag + ".json")) << to_json().dump(2) << '\n';
  std::ofstream csv(dir / ("confusion_" + tag + ".csv"));
  csv << "true\\pred";
  for (std::size_t c = 0; c < confusion.size(); ++c) csv << ',' << c;
  csv << '\n';
  for (std::size_t r = 0; r < confusion.size(); ++r) {
    csv << r;
    for (std::size_t v : confusion[r]) csv << ',' << v;
    csv << '\n';
  }
}

EvalResult score_predictions(std::span<const int> labels, std::span<const int> predicted, std::size_t classes) {
  if (labels.size() != predicted.size()) throw std::invalid_argument("label and prediction counts differ");
  EvalResult r;
  r.confusion.assign(classes, std::vector<std::size_t>(classes, 0));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || predicted[i] < 0 || static_cast<std::size_t>(labels[i]) >= classes ||
        static_cast<std::size_t>(predicted[i]) >= classes) {
      throw std::out_of_range("class id outside [0, " + std::to_string(classes) + ")");
    }
    ++r.confusion[labels[i]][predicted[i]];
    r.correct += labels[i] == predicted[i];
  }
  r.count = labels.size();
  r.accuracy = r.count ? static_cast<double>(r.correct) / static_cast<double>(r.count) : 0.0;
  return r;
}

EvalResult evaluate_split(VideoClassifier& model, const VideoSplit* split, const FeatureCache* cache, std::size_t limit,
                          std::size_t batch_size) {
  NoGradGuard guard;
  const std::size_t total = cache ? cache->size() : split->size();
  const std::size_t n = limit ? std::min(limit, total) : total;
  std::vector<int> labels, predicted;
  for (std::size_t start = 0; start < n; start += batch_size) {
    std::vector<std::size_t> idx(std::min(batch_size, n - start));
    std::iota(idx.begin(), idx.end(), start);
    FeatureVolume fv;
    if (cache) {
      fv = cache->batch(idx);
      for (std::size_t i : idx) labels.push_back(cache->labels[i]);
    } else {
      std::vector<syncmnist::VideoSample> videos;
      for (std::size_t i : idx) videos.push_back(split->sample(i));
      std::vector<const syncmnist::VideoSample*> ptrs;
      for (const auto& v : videos) {
        ptrs.push_back(&v);
        labels.push_back(v.label);
      }
      fv = model.features(ptrs);
    }
    for (int p : predictions(model.logits(fv, false))) predicted.push_back(p);
  }
  return score_predictions(labels, predicted, model.num_classes());
}

EvalResult evaluate_checkpoint(const std::filesystem::path& checkpoint, const std::string& split,
                               const std::vector<std::string>& overrides, const std::filesystem::path& out_dir,
                               std::ostream* log) {
  const Checkpoint ckpt = read_checkpoint(checkpoint);
  if (!ckpt.meta.contains("config")) throw CheckpointError("checkpoint " + checkpoint.string() + " carries no config");
  for (const auto& e : ckpt.entries) {
    if (e.name == "head.w" && (e.shape.size() != 2 || e.shape[1] != syncmnist::kNumClasses)) {
      throw CheckpointError("checkpoint head has " + shape_to_string(e.shape) + " but the taxonomy has " +
                            std::to_string(syncmnist::kNumClasses) + " classes");
    }
  }
  nlohmann::json cfg_json = ckpt.meta.at("config");
  apply_overrides(cfg_json, overrides);
  ExperimentConfig config = experiment_from_json(cfg_json);
  config.backbone_checkpoint.clear();

  VideoClassifier model(config);
  load_checkpoint(model.store(), checkpoint, true);
  auto sprites = std::make_shared<const syncmnist::SpriteBank>(load_sprites(config.data));
  const VideoSplit data = open_split(config, split, sprites);
  if (log) *log << "evaluating " << data.size() << " " << split << " videos\n";
  const EvalResult r = evaluate_split(model, &data, nullptr, 0);
  r.write(out_dir, split);
  return r;
}

RSTG_NAMESPACE_END
