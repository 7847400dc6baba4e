// Copyright 2026 The RSTG Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include <fstream>
#include <iomanip>
#include <iostream>

#include "cli.hpp"
#include "rstg/gradcheck_suite.hpp"

namespace rstg::cli {

int run_gradcheck(const GradcheckArgs& args) {
  const auto targets = args.targets.empty() ? gradcheck_targets() : args.targets;
  GradCheckOptions options;
  options.tolerance = args.tolerance;
  options.step = args.step;
  nlohmann::json cases = nlohmann::json::array();
  bool all_pass = true;
  for (std::size_t s = 0; s < args.seeds; ++s) {
    for (const auto& target : targets) {
      const GradcheckCase c = run_gradcheck_case(target, args.seed + s, options);
      all_pass = all_pass && c.report.passed;
      std::cout << std::left << std::setw(22) << target << " seed " << args.seed + s << "  params " << std::setw(6)
                << c.parameters << " max rel err " << std::scientific << std::setprecision(3)
                << c.report.max_rel_error << std::defaultfloat << "  " << (c.report.passed ? "PASS" : "FAIL") << "  ("
                << std::fixed << std::setprecision(2) << c.seconds << " s)" << std::defaultfloat << "\n";
      nlohmann::json j = c.report.to_json();
      j["target"] = target;
      j["seed"] = args.seed + s;
      j["seconds"] = c.seconds;
      cases.push_back(j);
    }
  }
  if (!args.out.empty()) {
    std::filesystem::create_directories(args.out);
    std::ofstream(args.out / "report.json")
        << nlohmann::json{{"passed", all_pass}, {"tolerance", args.tolerance}, {"step", args.step}, {"cases", cases}}.dump(2)
        << '\n';
  }
  return all_pass ? 0 : 1;
}

}  // namespace rstg::cli
