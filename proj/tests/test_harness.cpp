// Copyright 2026 The RSTG Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "rstg/training.hpp"

namespace rstg {
namespace {

namespace fs = std::filesystem;

fs::path temp_dir(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("rstg_harness_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

ExperimentConfig tiny_experiment() {
  nlohmann::json j = to_json(ExperimentConfig{});
  apply_overrides(j, {"--backbone.widths=[4,8]", "--pretrain.steps=0", "--data.train_videos=12",
                      "--data.val_videos=8", "--data.test_videos=8", "--data.generator.frames=3",
                      "--rstg.dim=8", "--rstg.iterations=1", "--rstg.scales=[1,2]", "--batch_size=4",
                      "--max_steps=4", "--eval_interval=2", "--optimizer.learning_rate=0.01"});
  return experiment_from_json(j);
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TEST(Config, OverridesReachNestedFields) {
  nlohmann::json j = to_json(ExperimentConfig{});
  apply_overrides(j, {"--rstg.iterations=5", "optimizer.learning_rate=0.5", "--rstg.scheduler=1-temp",
                      "--model=mean-lstm", "--data.generator.num_digits=5"});
  const ExperimentConfig c = experiment_from_json(j);
  EXPECT_EQ(c.rstg.iterations, 5u);
  EXPECT_DOUBLE_EQ(c.optimizer.learning_rate, 0.5);
  EXPECT_EQ(c.rstg.scheduler, Scheduler::one_temp);
  EXPECT_EQ(c.model, "mean-lstm");
  EXPECT_EQ(c.data.generator.num_digits, 5u);
  EXPECT_EQ(to_json(experiment_from_json(to_json(c))), to_json(c));
}

TEST(Config, UnknownFieldsAreRejected) {
  nlohmann::json j = to_json(ExperimentConfig{});
  apply_override(j, "rstg.dimension", "3");
  EXPECT_ANY_THROW(experiment_from_json(j));
  EXPECT_ANY_THROW(experiment_from_json({{"epochs", 3}}));
  EXPECT_ANY_THROW(apply_overrides(j, {"--no-equals-sign"}));
}

TEST(Config, LoadsFileWithOverrides) {
  const fs::path dir = temp_dir("cfg");
  std::ofstream(dir / "c.json") << R"({"batch_size": 8, "rstg": {"dim": 16}})";
  const ExperimentConfig c = load_experiment(dir / "c.json", {"--rstg.dim=24"});
  EXPECT_EQ(c.batch_size, 8u);
  EXPECT_EQ(c.rstg.dim, 24u);
  fs::remove_all(dir);
}

TEST(Config, OutputRootEnvironment) {
  ::setenv(kOutputRootEnv, "/tmp/rstg_root", 1);
  EXPECT_EQ(resolve_output("run1"), fs::path("/tmp/rstg_root/run1"));
  EXPECT_EQ(resolve_output("/abs/dir"), fs::path("/abs/dir"));
  ::unsetenv(kOutputRootEnv);
  EXPECT_EQ(resolve_output("run1"), fs::path("run1"));
}

TEST(Schedule, DecaysAfterPatienceStaleEvals) {
  OptimizerConfig o;
  o.learning_rate = 1.0;
  o.patience = 3;
  o.decay_factor = 10;
  o.min_improvement = 0.1;
  PlateauSchedule s(o);
  EXPECT_FALSE(s.observe(100, 0.50));
  EXPECT_FALSE(s.observe(200, 0.5005));  // below the 0.1 point threshold
  EXPECT_FALSE(s.observe(300, 0.40));
  EXPECT_TRUE(s.observe(400, 0.50));
  EXPECT_DOUBLE_EQ(s.learning_rate(), 0.1);
  ASSERT_EQ(s.events().size(), 1u);
  EXPECT_EQ(s.events()[0].window_first, 200u);
  EXPECT_EQ(s.events()[0].window_last, 400u);
  EXPECT_FALSE(s.observe(500, 0.52));
  EXPECT_DOUBLE_EQ(s.learning_rate(), 0.1);
}

TEST(Scoring, ConfusionAndAccuracy) {
  const std::vector<int> labels{0, 1, 2, 2, 1};
  const std::vector<int> pred{0, 2, 2, 2, 1};
  const EvalResult r = score_predictions(labels, pred, 3);
  EXPECT_EQ(r.count, 5u);
  EXPECT_EQ(r.correct, 4u);
  EXPECT_DOUBLE_EQ(r.accuracy, 0.8);
  EXPECT_EQ(r.confusion[1][2], 1u);
  EXPECT_EQ(r.confusion[2][2], 2u);
  EXPECT_ANY_THROW(score_predictions(labels, std::vector<int>{0, 1}, 3));
  EXPECT_ANY_THROW(score_predictions(std::vector<int>{5}, std::vector<int>{0}, 3));
  const Tensor logits({2, 3}, {0.1f, 0.9f, 0.2f, 3.0f, -1.0f, 3.0f});
  EXPECT_EQ(predictions(logits), (std::vector<int>{1, 0}));
}

TEST(Ablation, OrderingChecks) {
  std::vector<AblationEntry> e;
  for (auto [name, acc] : {std::pair{"space-only", 0.40}, {"time-only", 0.70}, {"1-temp", 0.72},
                           {"all-temp", 0.80}, {"positional-all-temp", 0.81}}) {
    e.push_back({name, true, "", acc, 0, 0});
  }
  nlohmann::json checks = ablation_checks(e);
  for (const auto& c : checks) EXPECT_TRUE(c["pass"].get<bool>()) << c["claim"];
  e[3].accuracy = 0.71;
  checks = ablation_checks(e);
  std::size_t failed = 0;
  for (const auto& c : checks) failed += !c["pass"].get<bool>();
  EXPECT_EQ(failed, 2u);  // all-temp >= 1-temp, all-temp - time-only >= 3
  e.pop_back();
  e[0].ok = false;
  for (const auto& c : ablation_checks(e)) {
    if (c["claim"].get<std::string>().find("space-only") != std::string::npos) {
      EXPECT_FALSE(c["evaluated"].get<bool>());
    }
  }
  EXPECT_EQ(default_ablation_variants().size(), 6u);
  EXPECT_ANY_THROW(ablation_variant("2-temp"));
}

TEST(Training, TinyRunWritesArtifactsAndIsDeterministic) {
  const ExperimentConfig cfg = tiny_experiment();
  const fs::path a = temp_dir("run_a"), b = temp_dir("run_b");
  const TrainResult ra = train(cfg, a);
  const TrainResult rb = train(cfg, b);
  EXPECT_EQ(ra.steps, 4u);
  EXPECT_EQ(ra.losses, rb.losses);
  EXPECT_EQ(ra.evals, rb.evals);
  for (const char* f : {"metrics.csv", "report.json", "config.json"}) EXPECT_TRUE(fs::exists(a / f)) << f;
  EXPECT_TRUE(fs::exists(ra.best_checkpoint));
  EXPECT_TRUE(fs::exists(ra.last_checkpoint));

  std::istringstream csv(read_file(a / "metrics.csv"));
  std::string line;
  std::getline(csv, line);
  EXPECT_EQ(line, "step,loss,val_acc");
  std::size_t rows = 0, evals = 0;
  while (std::getline(csv, line)) {
    ++rows;
    evals += line.back() != ',';
  }
  EXPECT_EQ(rows, 4u);
  EXPECT_EQ(evals, 2u);

  const auto report = nlohmann::json::parse(read_file(a / "report.json"));
  EXPECT_TRUE(report.contains("config"));
  EXPECT_TRUE(report.contains("best_accuracy"));

  const EvalResult e = evaluate_checkpoint(ra.best_checkpoint, "val", {}, a);
  EXPECT_EQ(e.count, 8u);
  EXPECT_NEAR(e.accuracy, ra.best_accuracy, 1e-12);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Training, BaselineModelsTrain) {
  for (const char* model : {"mean-lstm", "conv-lstm"}) {
    ExperimentConfig cfg = tiny_experiment();
    cfg.model = model;
    cfg.baseline.hidden = 8;
    cfg.baseline.conv_widths = {4};
    cfg.max_steps = 2;
    const fs::path dir = temp_dir(model);
    const TrainResult r = train(cfg, dir);
    EXPECT_EQ(r.losses.size(), 2u);
    for (double l : r.losses) EXPECT_TRUE(std::isfinite(l));
    fs::remove_all(dir);
  }
}

TEST(Classifier, FrozenBackboneIsExcludedFromTraining) {
  ExperimentConfig cfg = tiny_experiment();
  cfg.backbone_mode = BackboneMode::frozen;
  VideoClassifier frozen(cfg);
  for (const Parameter& p : frozen.trainable_parameters()) EXPECT_NE(p.name.rfind("backbone.", 0), 0u) << p.name;
  cfg.backbone_mode = BackboneMode::finetune;
  VideoClassifier tuned(cfg);
  EXPECT_GT(tuned.trainable_parameters().size(), frozen.trainable_parameters().size());
}

}  // namespace
}  // namespace rstg
