// Copyright 2026 The RSTG Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

// One PASS/FAIL line per acceptance criterion. Criteria 5 and 6 train models;
// criterion 6 reuses an existing ablation report when one is given or found.

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>

#include "checks.hpp"
#include "rstg/runtime.hpp"
#include "rstg/training.hpp"

namespace fs = std::filesystem;
using rstg::acceptance::Verdict;

namespace {

constexpr std::size_t kDatasetSamples = 10000;
constexpr std::size_t kRoundTripSamples = 1000;
constexpr double kHistogramTolerance = 0.02;  // relative to the uniform count
constexpr double kOverfitTarget = 0.99;
constexpr std::size_t kOverfitMaxSteps = 2000;
constexpr double kOverfitMinutes = 30;
constexpr double kAblationHours = 12;

double minutes_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / 60.0;
}

Verdict dataset_consistency(const fs::path& out) {
  namespace sm = rstg::syncmnist;
  Verdict v{4, "dataset self-consistency", true, ""};
  const sm::SpriteBank bank = sm::procedural_sprites();
  const sm::GeneratorConfig gen;
  std::vector<std::size_t> hist(sm::kNumClasses, 0);
  std::size_t agree = 0;
  for (std::size_t i = 0; i < kDatasetSamples; ++i) {
    const sm::VideoSample s = sm::generate_sample(gen, bank, 1, sm::Split::train, i);
    ++hist[static_cast<std::size_t>(s.label)];
    agree += sm::label_from_trajectories(s.trajectories, s.digit_ids) == s.label;
  }
  const double expected = static_cast<double>(kDatasetSamples) / sm::kNumClasses;
  double worst = 0;
  for (std::size_t c : hist) worst = std::max(worst, std::abs(static_cast<double>(c) - expected) / expected);

  const sm::Dataset d = sm::generate_dataset({kRoundTripSamples, 1, sm::Split::val, gen}, bank);
  fs::create_directories(out);
  sm::save_dataset(d, out / "roundtrip");
  const sm::Dataset back = sm::load_dataset(out / "roundtrip");
  bool lossless = back.samples.size() == d.samples.size();
  for (std::size_t i = 0; lossless && i < d.samples.size(); ++i) {
    lossless = back.samples[i].label == d.samples[i].label && back.samples[i].pixels.size() == d.samples[i].pixels.size();
    for (std::size_t p = 0; lossless && p < d.samples[i].pixels.size(); ++p) {
      lossless = sm::quantize(back.samples[i].pixels[p]) == sm::quantize(d.samples[i].pixels[p]);
    }
  }
  fs::remove(out / "roundtrip.bin");
  fs::remove(out / "roundtrip.json");

  v.pass = agree == kDatasetSamples && worst <= kHistogramTolerance && lossless;
  std::ostringstream s;
  s << "oracle " << agree << "/" << kDatasetSamples << ", histogram max deviation " << worst * 100 << "% (tol "
    << kHistogramTolerance * 100 << "%), round trip of " << kRoundTripSamples << " videos "
    << (lossless ? "lossless" : "LOSSY");
  v.detail = s.str();
  return v;
}

Verdict overfit(const fs::path& config_dir, const fs::path& out) {
  Verdict v{5, "overfit 64 training videos", false, ""};
  const auto t0 = std::chrono::steady_clock::now();
  rstg::ExperimentConfig cfg = rstg::load_experiment(
      config_dir / "overfit.json",
      {"--target_accuracy=" + std::to_string(kOverfitTarget), "--max_steps=" + std::to_string(kOverfitMaxSteps)});
  const rstg::TrainResult r = rstg::train(cfg, out / "overfit", {}, &std::cout);
  const double minutes = minutes_since(t0);
  v.pass = r.best_accuracy >= kOverfitTarget && r.best_step <= kOverfitMaxSteps && minutes <= kOverfitMinutes;
  std::ostringstream s;
  s << "best train accuracy " << r.best_accuracy << " at step " << r.best_step << " (target " << kOverfitTarget
    << " within " << kOverfitMaxSteps << " steps), " << std::fixed << std::setprecision(1) << minutes << " min (budget "
    << kOverfitMinutes << ")";
  v.detail = s.str();
  return v;
}

Verdict ablation(const fs::path& config_dir, const fs::path& out, fs::path report_path) {
  Verdict v{6, "ablation ordering", false, ""};
  std::ostringstream s;
  nlohmann::json report;
  if (report_path.empty()) report_path = out / "ablation" / "ablation.json";
  if (fs::exists(report_path)) {
    std::ifstream in(report_path);
    report = nlohmann::json::parse(in);
    s << "report " << report_path.string() << ": ";
  } else {
    const auto t0 = std::chrono::steady_clock::now();
    const rstg::ExperimentConfig base = rstg::load_experiment(config_dir / "desk.json", {});
    const auto r = rstg::run_ablation_suite(base, report_path.parent_path(), rstg::default_ablation_variants(), &std::cout);
    report = r.to_json();
    const double hours = minutes_since(t0) / 60.0;
    s << std::fixed << std::setprecision(2) << hours << " h (budget " << kAblationHours << " h): " << std::defaultfloat;
    if (hours > kAblationHours) s << "OVER BUDGET; ";
  }
  bool all = !report.at("checks").empty();
  for (const auto& e : report.at("variants")) {
    s << e.at("variant").get<std::string>() << " " << std::fixed << std::setprecision(1)
      << e.at("accuracy").get<double>() * 100 << std::defaultfloat << (e.at("ok").get<bool>() ? "" : " (error)") << ", ";
  }
  for (const auto& c : report.at("checks")) {
    const bool pass = c.at("evaluated").get<bool>() && c.at("pass").get<bool>();
    all = all && pass;
    if (!pass) s << "[failed: " << c.at("claim").get<std::string>() << "] ";
  }
  v.pass = all;
  v.detail = s.str();
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  rstg::configure_allocator();
  std::cout.setf(std::ios::unitbuf);
  CLI::App app{"Acceptance criteria"};
  std::vector<int> only;
  std::string out_dir = "acceptance", report, config_dir = RSTG_SOURCE_DIR "/configs";
  app.add_option("--only", only, "Criterion numbers to run (default: all)")->delimiter(',');
  app.add_option("--out", out_dir, "Output directory (relative to the output root)");
  app.add_option("--ablation-report", report, "Existing ablation.json to score for criterion 6");
  app.add_option("--configs", config_dir, "Directory holding overfit.json and desk.json");
  CLI11_PARSE(app, argc, argv);

  const fs::path out = rstg::resolve_output(out_dir);
  const std::set<int> selected(only.begin(), only.end());
  auto want = [&](int id) { return selected.empty() || selected.count(id); };

  std::vector<Verdict> verdicts;
  auto run = [&](int id, auto&& fn) {
    if (!want(id)) return;
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = fn();
    } catch (const std::exception& e) {
      v = {id, "criterion " + std::to_string(id), false, std::string("exception: ") + e.what()};
    }
    std::cout << (v.pass ? "PASS" : "FAIL") << "  [" << v.id << "] " << v.title << ": " << v.detail << "  ("
              << std::fixed << std::setprecision(1) << minutes_since(t0) * 60 << " s)" << std::defaultfloat << "\n";
    verdicts.push_back(v);
  };

  run(1, rstg::acceptance::gradient_correctness);
  run(2, rstg::acceptance::complexity_identity);
  run(3, rstg::acceptance::topology_oracle);
  run(4, [&] { return dataset_consistency(out); });
  run(7, rstg::acceptance::aggregation_contracts);
  run(8, rstg::acceptance::invariance_suite);
  run(5, [&] { return overfit(config_dir, out); });
  run(6, [&] { return ablation(config_dir, out, report); });

  std::size_t failed = 0;
  nlohmann::json summary = nlohmann::json::array();
  for (const auto& v : verdicts) {
    failed += !v.pass;
    summary.push_back({{"criterion", v.id}, {"title", v.title}, {"pass", v.pass}, {"detail", v.detail}});
  }
  fs::create_directories(out);
  std::ofstream(out / "acceptance.json") << summary.dump(2) << '\n';
  std::cout << verdicts.size() - failed << "/" << verdicts.size() << " criteria passed\n";
  return failed == 0 ? 0 : 1;
}
