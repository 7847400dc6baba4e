// Copyright 2026 The RSTG Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include <cstdlib>
#include <fstream>
#include <stdexcept>

#include "rstg/experiment.hpp"

RSTG_NAMESPACE_BEGIN

namespace {

nlohmann::json to_json(const OptimizerConfig& o) {
  return {{"learning_rate", o.learning_rate}, {"momentum", o.momentum},           {"nesterov", o.nesterov},
          {"decay_factor", o.decay_factor},   {"patience", o.patience},           {"min_improvement", o.min_improvement}};
}

nlohmann::json to_json(const DataConfig& d) {
  return {{"train_videos", d.train_videos},
          {"val_videos", d.val_videos},
          {"test_videos", d.test_videos},
          {"seed", d.seed},
          {"generator", syncmnist::generator_json(d.generator)},
          {"sprites", d.sprites},
          {"idx_images", d.idx_images},
          {"idx_labels", d.idx_labels},
          {"sprite_variants", d.sprite_variants},
          {"dataset_dir", d.dataset_dir}};
}

nlohmann::json to_json(const PretrainConfig& p) {
  return {{"steps", p.steps},         {"batch_size", p.batch_size}, {"learning_rate", p.learning_rate},
          {"momentum", p.momentum},   {"seed", p.seed},             {"eval_samples", p.eval_samples}};
}

template <typename Fn>
void each_field(const nlohmann::json& j, const char* section, Fn&& fn) {
  if (!j.is_object()) throw std::invalid_argument(std::string("config section '") + section + "' must be an object");
  for (const auto& [key, value] : j.items()) {
    if (!fn(key, value)) throw std::invalid_argument(std::string("unknown field '") + section + "." + key + "'");
  }
}

}  // namespace

void ExperimentConfig::validate() const {
  if (model != "rstg" && model != "mean-lstm" && model != "conv-lstm") {
    throw std::invalid_argument("unknown model '" + model + "' (rstg|mean-lstm|conv-lstm)");
  }
  if (model == "rstg") rstg.validate();
  data.generator.validate();
  if (batch_size == 0) throw std::invalid_argument("batch_size must be positive");
  if (eval_interval == 0) throw std::invalid_argument("eval_interval must be positive");
  if (target_accuracy < 0 || target_accuracy > 1) throw std::invalid_argument("target_accuracy must be in [0, 1]");
  if (eval_split != "val" && eval_split != "train" && eval_split != "test") {
    throw std::invalid_argument("eval_split must be train, val or test");
  }
  if (optimizer.learning_rate <= 0 || optimizer.decay_factor < 1) throw std::invalid_argument("bad optimizer settings");
  if (data.train_videos == 0) throw std::invalid_argument("data.train_videos must be positive");
}

nlohmann::json to_json(const ExperimentConfig& c) {
  return {{"model", c.model},
          {"rstg", to_json(c.rstg)},
          {"backbone", to_json(c.backbone)},
          {"baseline", to_json(c.baseline)},
          {"pretrain", to_json(c.pretrain)},
          {"optimizer", to_json(c.optimizer)},
          {"data", to_json(c.data)},
          {"backbone_mode", c.backbone_mode == BackboneMode::frozen ? "frozen" : "finetune"},
          {"backbone_checkpoint", c.backbone_checkpoint},
          {"batch_size", c.batch_size},
          {"max_steps", c.max_steps},
          {"eval_interval", c.eval_interval},
          {"eval_videos", c.eval_videos},
          {"eval_split", c.eval_split},
          {"seed", c.seed},
          {"output_dir", c.output_dir},
          {"checkpoint_interval", c.checkpoint_interval},
          {"target_accuracy", c.target_accuracy}};
}

ExperimentConfig experiment_from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  each_field(j, "config", [&](const std::string& key, const nlohmann::json& v) {
    if (key == "model") c.model = v.get<std::string>();
    else if (key == "rstg") c.rstg = rstg_config_from_json(v, c.rstg);
    else if (key == "backbone") c.backbone = backbone_config_from_json(v, c.backbone);
    else if (key == "baseline") c.baseline = baseline_config_from_json(v, c.baseline);
    else if (key == "pretrain") {
      each_field(v, "pretrain", [&](const std::string& k, const nlohmann::json& x) {
        if (k == "steps") c.pretrain.steps = x.get<std::size_t>();
        else if (k == "batch_size") c.pretrain.batch_size = x.get<std::size_t>();
        else if (k == "learning_rate") c.pretrain.learning_rate = x.get<double>();
        else if (k == "momentum") c.pretrain.momentum = x.get<double>();
        else if (k == "seed") c.pretrain.seed = x.get<std::uint64_t>();
        else if (k == "eval_samples") c.pretrain.eval_samples = x.get<std::size_t>();
        else return false;
        return true;
      });
    } else if (key == "optimizer") {
      each_field(v, "optimizer", [&](const std::string& k, const nlohmann::json& x) {
        if (k == "learning_rate" || k == "lr") c.optimizer.learning_rate = x.get<double>();
        else if (k == "momentum") c.optimizer.momentum = x.get<double>();
        else if (k == "nesterov") c.optimizer.nesterov = x.get<bool>();
        else if (k == "decay_factor") c.optimizer.decay_factor = x.get<double>();
        else if (k == "patience") c.optimizer.patience = x.get<std::size_t>();
        else if (k == "min_improvement") c.optimizer.min_improvement = x.get<double>();
        else return false;
        return true;
      });
    } else if (key == "data") {
      each_field(v, "data", [&](const std::string& k, const nlohmann::json& x) {
        if (k == "train_videos") c.data.train_videos = x.get<std::size_t>();
        else if (k == "val_videos") c.data.val_videos = x.get<std::size_t>();
        else if (k == "test_videos") c.data.test_videos = x.get<std::size_t>();
        else if (k == "seed") c.data.seed = x.get<std::uint64_t>();
        else if (k == "generator") c.data.generator = syncmnist::generator_from_json(x);
        else if (k == "sprites") c.data.sprites = x.get<std::string>();
        else if (k == "idx_images") c.data.idx_images = x.get<std::string>();
        else if (k == "idx_labels") c.data.idx_labels = x.get<std::string>();
        else if (k == "sprite_variants") c.data.sprite_variants = x.get<std::size_t>();
        else if (k == "dataset_dir") c.data.dataset_dir = x.get<std::string>();
        else return false;
        return true;
      });
    } else if (key == "backbone_mode") {
      const auto s = v.get<std::string>();
      if (s == "frozen") c.backbone_mode = BackboneMode::frozen;
      else if (s == "finetune") c.backbone_mode = BackboneMode::finetune;
      else throw std::invalid_argument("backbone_mode must be finetune or frozen");
    } else if (key == "backbone_checkpoint") c.backbone_checkpoint = v.get<std::string>();
    else if (key == "batch_size") c.batch_size = v.get<std::size_t>();
    else if (key == "max_steps") c.max_steps = v.get<std::size_t>();
    else if (key == "eval_interval") c.eval_interval = v.get<std::size_t>();
    else if (key == "eval_videos") c.eval_videos = v.get<std::size_t>();
    else if (key == "eval_split") c.eval_split = v.get<std::string>();
    else if (key == "seed") c.seed = v.get<std::uint64_t>();
    else if (key == "output_dir") c.output_dir = v.get<std::string>();
    else if (key == "checkpoint_interval") c.checkpoint_interval = v.get<std::size_t>();
    else if (key == "target_accuracy") c.target_accuracy = v.get<double>();
    else return false;
    return true;
  });
  c.validate();
  return c;
}

void apply_override(nlohmann::json& config, const std::string& key, const std::string& value) {
  if (key.empty()) throw std::invalid_argument("empty override key");
  nlohmann::json* node = &config;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw std::invalid_argument("malformed override key '" + key + "'");
    if (dot == std::string::npos) {
      nlohmann::json parsed = nlohmann::json::parse(value, nullptr, false);
      (*node)[part] = parsed.is_discarded() ? nlohmann::json(value) : parsed;
      return;
    }
    node = &(*node)[part];
    if (node->is_null()) *node = nlohmann::json::object();
    start = dot + 1;
  }
}

void apply_overrides(nlohmann::json& config, const std::vector<std::string>& items) {
  for (std::string item : items) {
    if (item.rfind("--", 0) == 0) item = item.substr(2);
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("override '" + item + "' is not key=value");
    apply_override(config, item.substr(0, eq), item.substr(eq + 1));
  }
}

ExperimentConfig load_experiment(const std::filesystem::path& file, const std::vector<std::string>& overrides) {
  nlohmann::json j = nlohmann::json::object();
  if (!file.empty()) {
    std::ifstream in(file);
    if (!in) throw std::runtime_error("cannot open config " + file.string());
    j = nlohmann::json::parse(in, nullptr, true, true);
  }
  apply_overrides(j, overrides);
  return experiment_from_json(j);
}

std::filesystem::path resolve_output(const std::string& dir) {
  const std::filesystem::path p(dir);
  if (p.is_absolute()) return p;
  const char* root = std::getenv(kOutputRootEnv);
  return root && *root ? std::filesystem::path(root) / p : p;
}

syncmnist::SpriteBank load_sprites(const DataConfig& data) {
  if (data.sprites == "procedural") return syncmnist::procedural_sprites(data.sprite_variants);
  if (data.sprites == "idx") return syncmnist::load_idx_sprites(data.idx_images, data.idx_labels);
  throw std::invalid_argument("data.sprites must be procedural or idx");
}

RSTG_NAMESPACE_END
