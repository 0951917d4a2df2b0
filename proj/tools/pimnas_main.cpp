// Copyright 2026 The pimnas Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "pimnas/pim/hardware.hpp"
#include "pimnas/pipeline/pipeline.hpp"
#include "pimnas/space/search_space.hpp"

namespace {

using namespace pimnas;

struct CommonFlags {
  std::string config;
  std::vector<std::string> sets;
  std::string out;
  std::string seed;
  std::string w_acc;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("-c,--config", f.config, "JSON configuration file");
  cmd->add_option("--set", f.sets, "override a config field, e.g. --set arch_search.evolution.population=8")
      ->take_all();
  cmd->add_option("-o,--out", f.out, "output directory (overrides output_dir)");
  cmd->add_option("--seed", f.seed, "global seed (overrides seed)");
  cmd->add_option("--w-acc", f.w_acc, "comma-separated accuracy weights (overrides w_acc)");
}

pipeline::RunConfig resolve(const CommonFlags& f) {
  std::vector<std::string> overrides = f.sets;
  if (!f.out.empty()) overrides.push_back("output_dir=\"" + f.out + "\"");
  if (!f.seed.empty()) overrides.push_back("seed=" + f.seed);
  if (!f.w_acc.empty()) overrides.push_back("w_acc=[" + f.w_acc + "]");
  return pipeline::load_config(f.config, overrides);
}

int run(int argc, char** argv) {
  CLI::App app{"Joint architecture, quantization and crossbar search for processing-in-memory accelerators"};
  app.require_subcommand(1);

  CommonFlags flags;
  std::string until;
  for (const std::string& step : pipeline::step_names()) {
    add_common(app.add_subcommand(step, "run the " + step + " step"), flags);
  }
  CLI::App* run_all = app.add_subcommand("run-all", "run every step, resuming completed ones");
  add_common(run_all, flags);
  run_all->add_option("--until", until, "stop after this step");
  CLI::App* report = app.add_subcommand("report", "write pareto.csv and summary.json for a finished run");
  add_common(report, flags);

  std::string genome, profile = "table1", hardware, cost_out;
  CLI::App* cost = app.add_subcommand("cost", "hardware report for one genome string");
  cost->add_option("-g,--genome", genome, "genome string")->required();
  cost->add_option("--space", profile, "search-space profile (table1, table1-stride2, desk)");
  cost->add_option("--hardware", hardware, "hardware constants table (JSON)");
  cost->add_option("-o,--out", cost_out, "write the JSON report here instead of stdout");

  CLI11_PARSE(app, argc, argv);

  if (cost->parsed()) {
    const space::SearchSpace s = space::SearchSpace::by_name(profile);
    const pim::HardwareParams hw = hardware.empty() ? pim::HardwareParams{} : pim::HardwareParams::load(hardware);
    const nlohmann::json j = pipeline::cost_report(genome, s, hw, space::PimGenome{256, 8, 2});
    if (cost_out.empty()) {
      std::cout << j.dump(2) << "\n";
    } else {
      std::ofstream os(cost_out);
      if (!os) throw std::runtime_error("cannot write " + cost_out);
      os << j.dump(2) << "\n";
    }
    return 0;
  }

  pipeline::Pipeline p(resolve(flags), &std::cerr);
  try {
    if (run_all->parsed()) {
      p.run_all(until);
    } else if (report->parsed()) {
      p.report();
      p.write_manifest();
    } else {
      for (const std::string& step : pipeline::step_names()) {
        if (app.got_subcommand(step)) p.run_step(step);
      }
    }
  } catch (...) {
    p.write_manifest();
    throw;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "pimnas: error: " << e.what() << "\n";
    return 1;
  }
}
