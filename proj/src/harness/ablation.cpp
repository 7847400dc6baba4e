// Copyright 2026 The RSTG Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <chrono>
#include <fstream>
#include <map>

#include "rstg/training.hpp"

RSTG_NAMESPACE_BEGIN

AblationVariant ablation_variant(const std::string& name) {
  if (name == "space-only") return {name, {{"scheduler", "space-only"}}};
  if (name == "time-only") return {name, {{"scheduler", "time-only"}, {"iterations", 0}}};
  if (name == "homogeneous") return {name, {{"scheduler", "all-temp"}, {"homogeneous", true}}};
  if (name == "1-temp") return {name, {{"scheduler", "1-temp"}}};
  if (name == "all-temp") return {name, {{"scheduler", "all-temp"}}};
  if (name == "positional-all-temp") return {name, {{"scheduler", "all-temp"}, {"positional", true}}};
  if (name == "full-adjacency") return {name, {{"scheduler", "all-temp"}, {"adjacency", "full"}}};
  if (name == "4-connectivity") return {name, {{"scheduler", "all-temp"}, {"connectivity", "4"}}};
  throw std::invalid_argument("unknown ablation variant '" + name + "'");
}

std::vector<AblationVariant> default_ablation_variants() {
  std::vector<AblationVariant> out;
  for (const char* n : {"space-only", "time-only", "homogeneous", "1-temp", "all-temp", "positional-all-temp"}) {
    out.push_back(ablation_variant(n));
  }
  return out;
}

nlohmann::json AblationReport::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  std::vector<const AblationEntry*> ranked;
  for (const auto& e : entries) {
    rows.push_back({{"variant", e.name}, {"ok", e.ok}, {"error", e.error}, {"accuracy", e.accuracy},
                    {"best_step", e.best_step}, {"seconds", e.seconds}});
    if (e.ok) ranked.push_back(&e);
  }
  std::stable_sort(ranked.begin(), ranked.end(), [](auto* a, auto* b) { return a->accuracy < b->accuracy; });
  nlohmann::json rank = nlohmann::json::array();
  for (auto* e : ranked) rank.push_back({{"variant", e->name}, {"accuracy", e->accuracy}});
  return {{"variants", rows}, {"ranked_ascending", rank}, {"checks", checks}};
}

nlohmann::json ablation_checks(const std::vector<AblationEntry>& entries) {
  std::map<std::string, double> acc;
  for (const auto& e : entries) {
    if (e.ok) acc[e.name] = e.accuracy * 100.0;
  }
  nlohmann::json checks = nlohmann::json::array();
  auto claim = [&](const std::string& text, const std::vector<std::string>& needs, auto&& pred) {
    bool have = true;
    for (const auto& n : needs) have = have && acc.count(n);
    checks.push_back({{"claim", text}, {"evaluated", have}, {"pass", have && pred()}});
  };
  claim("all-temp >= 1-temp", {"all-temp", "1-temp"}, [&] { return acc["all-temp"] >= acc["1-temp"]; });
  claim("1-temp >= time-only", {"1-temp", "time-only"}, [&] { return acc["1-temp"] >= acc["time-only"]; });
  claim("time-only >= space-only", {"time-only", "space-only"}, [&] { return acc["time-only"] >= acc["space-only"]; });
  claim("all-temp - space-only >= 15 points", {"all-temp", "space-only"},
        [&] { return acc["all-temp"] - acc["space-only"] >= 15.0; });
  claim("all-temp - time-only >= 3 points", {"all-temp", "time-only"},
        [&] { return acc["all-temp"] - acc["time-only"] >= 3.0; });
  claim("positional-all-temp >= all-temp", {"positional-all-temp", "all-temp"},
        [&] { return acc["positional-all-temp"] >= acc["all-temp"]; });
  return checks;
}

AblationReport run_ablation_suite(const ExperimentConfig& base, const std::filesystem::path& out_dir,
                                  const std::vector<AblationVariant>& variants, std::ostream* log) {
  std::filesystem::create_directories(out_dir);
  auto sprites = std::make_shared<const syncmnist::SpriteBank>(load_sprites(base.data));

  // One backbone for every variant.
  ExperimentConfig shared_cfg = base;
  TrainInputs inputs;
  inputs.sprites = sprites;
  {
    VideoClassifier probe(base);
    const nlohmann::json note = init_backbone(probe, *sprites, out_dir, log);
    if (note.contains("path")) shared_cfg.backbone_checkpoint = note.at("path").get<std::string>();
    if (base.backbone_mode == BackboneMode::frozen) {
      const VideoSplit train_split = open_split(base, "train", sprites);
      const VideoSplit eval_split = open_split(base, base.eval_split, sprites);
      if (log) *log << "caching features: " << train_split.size() << " train / " << eval_split.size() << " eval\n";
      inputs.train_cache = std::make_shared<const FeatureCache>(cache_features(probe.backbone(), train_split));
      inputs.eval_cache = std::make_shared<const FeatureCache>(cache_features(probe.backbone(), eval_split));
    }
  }

  AblationReport report;
  for (const auto& v : variants) {
    AblationEntry entry;
    entry.name = v.name;
    const auto started = std::chrono::steady_clock::now();
    try {
      nlohmann::json cfg = to_json(shared_cfg);
      for (const auto& [k, val] : v.rstg.items()) cfg["rstg"][k] = val;
      cfg["model"] = "rstg";
      const ExperimentConfig vc = experiment_from_json(cfg);
      if (log) *log << "== variant " << v.name << "\n";
      const TrainResult r = train(vc, out_dir / v.name, inputs, log);
      entry.ok = true;
      entry.accuracy = r.best_accuracy;
      entry.best_step = r.best_step;
    } catch (const std::exception& e) {
      entry.error = e.what();
      if (log) *log << "variant " << v.name << " failed: " << e.what() << "\n";
    }
    entry.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    report.entries.push_back(entry);
    // Partial results survive an interrupted suite.
    report.checks = ablation_checks(report.entries);
    std::ofstream(out_dir / "ablation.json") << report.to_json().dump(2) << '\n';
  }
  return report;
}

RSTG_NAMESPACE_END
