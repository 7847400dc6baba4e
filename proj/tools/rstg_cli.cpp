// Copyright 2026 The RSTG Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

// rstg <command> [--config FILE] [--key=value ...]

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "cli.hpp"
#include "rstg/checkpoint.hpp"
#include "rstg/complexity.hpp"
#include "rstg/gradcheck_suite.hpp"
#include "rstg/runtime.hpp"
#include "rstg/training.hpp"

namespace {

using namespace rstg;
namespace fs = std::filesystem;

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  fs::create_directories(path.parent_path());
  std::ofstream(path) << j.dump(2) << '\n';
}

int gen_data(const ExperimentConfig& cfg, const std::string& out_arg, const std::string& splits) {
  const fs::path out = resolve_output(out_arg.empty() ? cfg.output_dir + "/data" : out_arg);
  const auto sprites = load_sprites(cfg.data);
  nlohmann::json summary = {{"seed", cfg.data.seed}, {"generator", syncmnist::generator_json(cfg.data.generator)}};
  for (const auto& name : split_list(splits)) {
    syncmnist::DatasetSpec spec;
    spec.seed = cfg.data.seed;
    spec.split = syncmnist::parse_split(name);
    spec.generator = cfg.data.generator;
    spec.num_videos = name == "train" ? cfg.data.train_videos : name == "val" ? cfg.data.val_videos : cfg.data.test_videos;
    syncmnist::DatasetWriter writer(out / name, spec, sprites.source);
    std::vector<std::size_t> histogram(syncmnist::kNumClasses, 0);
    std::size_t oracle_ok = 0;
    for (std::size_t i = 0; i < spec.num_videos; ++i) {
      const auto s = syncmnist::generate_sample(spec.generator, sprites, spec.seed, spec.split, i);
      ++histogram[s.label];
      oracle_ok += syncmnist::label_from_trajectories(s.trajectories, s.digit_ids) == s.label;
      writer.append(s);
    }
    writer.close();
    summary["splits"][name] = {{"count", spec.num_videos}, {"histogram", histogram}, {"label_oracle_agreement", oracle_ok}};
    std::cout << name << ": " << spec.num_videos << " videos -> " << (out / name).string() << ".{bin,json}\n";
  }
  write_json(out / "summary.json", summary);
  return 0;
}

int pretrain(const ExperimentConfig& cfg) {
  const fs::path out = resolve_output(cfg.output_dir);
  ParameterStore store(cfg.seed);
  const ConvBackbone backbone(store, cfg.backbone);
  const auto sprites = load_sprites(cfg.data);
  const PretrainResult r = pretrain_backbone(store, backbone, sprites, cfg.pretrain);
  save_checkpoint(store, out / "backbone.ckpt",
                  {{"heldout_accuracy", r.heldout_accuracy}, {"config", to_json(cfg)}, {"steps", r.steps}});
  std::ofstream metrics(out / "metrics.csv");
  metrics << "step,loss,val_acc\n";
  for (std::size_t i = 0; i < r.losses.size(); ++i) {
    metrics << i + 1 << ',' << r.losses[i] << ',';
    if (i + 1 == r.losses.size()) metrics << r.heldout_accuracy;
    metrics << '\n';
  }
  write_json(out / "report.json", {{"seed", cfg.seed},
                                   {"pretrain", {{"steps", r.steps}, {"seed", cfg.pretrain.seed}}},
                                   {"backbone", to_json(cfg.backbone)},
                                   {"heldout_accuracy", r.heldout_accuracy},
                                   {"final_loss", r.losses.empty() ? 0.0 : r.losses.back()},
                                   {"checkpoint", (out / "backbone.ckpt").string()}});
  std::cout << "held-out single-digit accuracy " << r.heldout_accuracy << "\n";
  return 0;
}

int complexity(const ExperimentConfig& cfg, std::size_t channels) {
  const fs::path out = resolve_output(cfg.output_dir);
  ParameterStore store(cfg.seed);
  RstgModel model(store, cfg.rstg, channels);
  const std::size_t T = cfg.data.generator.frames;
  const std::size_t side = syncmnist::kFrameSize >> cfg.backbone.widths.size();
  {
    NoGradGuard guard;
    model.forward(random_volume(1, T, side, side, channels, cfg.seed));
  }
  const ComplexityReport measured = complexity_measured(model, T);
  const ComplexityReport expected = complexity_expected(cfg.rstg, model.topology(), T);
  const bool match = measured.space_messages == expected.space_messages && measured.time_updates == expected.time_updates;
  nlohmann::json report = expected.to_json();
  report["scheduler"] = to_string(cfg.rstg.scheduler);
  report["scales"] = cfg.rstg.scales;
  report["adjacency"] = to_string(cfg.rstg.adjacency);
  report["measured"] = {{"space_messages", measured.space_messages}, {"time_updates", measured.time_updates}};
  report["counters_match"] = match;
  report["formula_all_temp"] = complexity_formula(T, expected.N, expected.E, expected.K).to_json();
  write_json(out / "report.json", report);
  std::cout << report.dump(2) << "\n";
  if (!match) {
    std::cerr << "counter/formula mismatch\n";
    return 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  rstg::configure_allocator();
  std::cout.setf(std::ios::unitbuf);
  CLI::App app{"Recurrent space-time graph models on SyncMNIST"};
  app.require_subcommand(1);
  std::string config_file;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", config_file, "JSON experiment config");
    sub->allow_extras();
    sub->footer("Any config field can be overridden with --key=value, e.g. --rstg.iterations=2");
  };

  auto* gen = app.add_subcommand("gen-data", "Generate SyncMNIST splits to disk");
  std::string gen_out, gen_splits = "train,val,test";
  add_common(gen);
  gen->add_option("--out", gen_out, "Output directory (default <output_dir>/data)");
  gen->add_option("--splits", gen_splits, "Comma-separated splits");

  auto* pre = app.add_subcommand("pretrain-backbone", "Pretrain the conv backbone on single-digit frames");
  add_common(pre);

  auto* trn = app.add_subcommand("train", "Train a model");
  add_common(trn);

  auto* evl = app.add_subcommand("eval", "Evaluate a checkpoint");
  std::string ckpt, split = "test", eval_out;
  evl->add_option("--checkpoint", ckpt, "Checkpoint written by train")->required();
  evl->add_option("--split", split, "train|val|test");
  evl->add_option("--out", eval_out, "Output directory (default: checkpoint directory)");
  evl->allow_extras();

  auto* abl = app.add_subcommand("ablate", "Train every ablation variant under one budget");
  std::string variants;
  add_common(abl);
  abl->add_option("--variants", variants, "Comma-separated variant names (default: the standard six)");

  auto* gc = app.add_subcommand("gradcheck", "64-bit finite-difference gradient checks on tiny configs");
  rstg::cli::GradcheckArgs gargs;
  std::string gtargets, gout;
  gc->add_option("--targets", gtargets, "Comma-separated targets (default: all)");
  gc->add_option("--seed", gargs.seed, "Seed");
  gc->add_option("--seeds", gargs.seeds, "Number of consecutive seeds");
  gc->add_option("--tolerance", gargs.tolerance, "Max relative error");
  gc->add_option("--step", gargs.step, "Central difference step");
  gc->add_option("--out", gout, "Output directory for report.json (relative to the output root)");

  auto* cx = app.add_subcommand("complexity", "Message-count formulas cross-checked against live counters");
  std::size_t channels = 8;
  add_common(cx);
  cx->add_option("--channels", channels, "Feature channels for the instrumented pass");

  CLI11_PARSE(app, argc, argv);

  try {
    auto load = [&](CLI::App* sub) { return load_experiment(config_file, sub->remaining()); };
    if (gen->parsed()) return gen_data(load(gen), gen_out, gen_splits);
    if (pre->parsed()) return pretrain(load(pre));
    if (trn->parsed()) {
      const ExperimentConfig cfg = load(trn);
      const TrainResult r = train(cfg, resolve_output(cfg.output_dir), {}, &std::cout);
      std::cout << "best " << cfg.eval_split << " accuracy " << r.best_accuracy << " at step " << r.best_step << "\n";
      return 0;
    }
    if (evl->parsed()) {
      const fs::path out = eval_out.empty() ? fs::path(ckpt).parent_path() : resolve_output(eval_out);
      const EvalResult r = evaluate_checkpoint(ckpt, split, evl->remaining(), out, &std::cout);
      std::cout << split << " accuracy " << r.accuracy << " (" << r.correct << "/" << r.count << ")\n";
      return 0;
    }
    if (abl->parsed()) {
      const ExperimentConfig cfg = load(abl);
      std::vector<AblationVariant> vs;
      if (variants.empty()) {
        vs = default_ablation_variants();
      } else {
        for (const auto& v : split_list(variants)) vs.push_back(ablation_variant(v));
      }
      const AblationReport rep = run_ablation_suite(cfg, resolve_output(cfg.output_dir), vs, &std::cout);
      std::cout << rep.to_json().dump(2) << "\n";
      return 0;
    }
    if (gc->parsed()) {
      gargs.targets = split_list(gtargets);
      if (!gout.empty()) gargs.out = resolve_output(gout);
      return rstg::cli::run_gradcheck(gargs);
    }
    if (cx->parsed()) return complexity(load(cx), channels);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
