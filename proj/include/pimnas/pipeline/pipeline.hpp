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


#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "pimnas/evo/evolution.hpp"
#include "pimnas/nn/param.hpp"
#include "pimnas/pim/hardware.hpp"
#include "pimnas/pipeline/config.hpp"
#include "pimnas/pipeline/datasets.hpp"
#include "pimnas/quant/quant_state.hpp"

namespace pimnas::pipeline {

class PipelineError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Steps in execution order.
const std::vector<std::string>& step_names();

/// Directory tag for one fitness weight, e.g. "w0.80".
std::string weight_tag(double w_acc);

/// Git blob hash ("blob <len>\0" + content, SHA-1, hex).
std::string git_blob_sha1(std::string_view content);
/// File content with run-time measurements removed: JSON keys and CSV
/// columns whose name contains "wallclock" are dropped.
std::string canonical_content(const std::filesystem::path& path);

/// Standalone hardware report for a genome string. Missing quant map means
/// uniform 9-bit; missing circuit part means the phase-1 default.
/// Hardware half of a candidate evaluation: energy, latency, EDP and the
/// EDP normalized to `reference` (over-capacity latency penalty applied).
evo::Evaluation cost_evaluation(const space::Genome& g, const space::SearchSpace& s, const pim::HardwareParams& hw,
                                const pim::HardwareReport& reference);

nlohmann::json cost_report(const std::string& genome, const space::SearchSpace& s, const pim::HardwareParams& hw,
                           const space::PimGenome& default_pim = {256, 8, 2});

struct SubnetCheckpoint {
  space::ArchGenome arch;
  nn::ParamStore<float> params;
  nlohmann::json header;
};
void save_subnet(const std::filesystem::path& path, const nn::ParamStore<float>& params, const space::SearchSpace& s,
                 const space::ArchGenome& arch, nlohmann::json extra = nlohmann::json::object());
SubnetCheckpoint load_subnet(const std::filesystem::path& path, const space::SearchSpace& s);

class Pipeline {
 public:
  explicit Pipeline(RunConfig config, std::ostream* progress = nullptr);

  const RunConfig& config() const { return config_; }
  const std::filesystem::path& out() const { return out_; }
  const Dataset& data();

  /// Runs one step (for every fitness weight where the step is per-weight).
  void run_step(const std::string& step);
  /// Runs every step not yet completed, stopping after `until` if given,
  /// then writes the report when all steps are done.
  void run_all(const std::string& until = "");
  bool step_done(const std::string& step) const;

  /// Writes pareto.csv and summary.json from the finished artifacts.
  nlohmann::json report();
  /// Writes manifest.json listing every artifact with its hash.
  nlohmann::json write_manifest();

 private:
  void train_supernet();
  void search_arch(double w);
  void pretrain_fp(double w);
  void train_quant_supernet(double w);
  void search_quant_pim(double w);
  void finetune(double w);

  std::filesystem::path wdir(double w) const;
  std::filesystem::path require(const std::filesystem::path& p) const;
  space::ArchGenome best_arch(double w) const;
  space::Genome best_genome(double w) const;
  void train_epochs(nn::ParamStore<float>& store, const space::ArchGenome& arch, const TrainSchedule& sched,
                    std::uint64_t seed, const space::QuantGenome* fixed_quant, quant::QuantState* state,
                    bool sample_bits, const std::string& label);
  nn::ImageSet eval_subset(int n) const;
  void mark_done(const std::string& step, double seconds);
  void log(const std::string& msg);

  RunConfig config_;
  std::filesystem::path out_;
  std::ostream* progress_;
  std::unique_ptr<Dataset> data_;
  pim::HardwareParams hw_;
  nlohmann::json steps_;
  std::map<std::string, double> accuracy_memo_;
};

}  // namespace pimnas::pipeline
