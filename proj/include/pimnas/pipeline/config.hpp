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

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pimnas/evo/evolution.hpp"
#include "pimnas/pim/hardware.hpp"
#include "pimnas/pipeline/datasets.hpp"
#include "pimnas/space/search_space.hpp"

namespace pimnas::pipeline {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct DatasetConfig {
  std::string kind = "synthetic";  // synthetic | cifar10
  SyntheticParams synthetic;
  std::string cifar10_dir;
  int val_size = 5000;
};

struct TrainSchedule {
  int epochs = 1;
  int batch_size = 128;
  double lr = 0.1;
  std::string optimizer = "sgd";  // sgd | adam
  double momentum = 0.9;
  double weight_decay = 5e-4;
  double factor = 0.2;          // learning-rate multiplier at each milestone
  std::vector<int> milestones;  // epochs at which the rate drops
  int period = 0;               // alternatively: drop every `period` epochs
  double period_fraction = 0.0; // or every fraction of the total epochs
};

struct SearchSettings {
  evo::EvolutionConfig evolution;
  int bn_batches = 20;
  int bn_batch_size = 128;
  int eval_size = 0;  // validation images scored per candidate (0 = all)
};

struct RunConfig {
  std::uint64_t seed = 0;
  std::string output_dir = "runs/default";
  space::SearchSpace space = space::SearchSpace::table1();
  DatasetConfig dataset;
  std::string hardware;  // hardware table path; empty = built-in defaults
  std::vector<double> w_acc{1.0, 0.8, 0.5};

  TrainSchedule supernet{120, 128, 0.1, "sgd", 0.9, 5e-4, 0.2, {}, 0, 0.25};
  SearchSettings arch_search;
  TrainSchedule pretrain{200, 128, 0.1, "sgd", 0.9, 5e-4, 0.2, {60, 120, 160}, 0, 0.0};
  TrainSchedule quant_train{120, 128, 0.0008, "adam", 0.9, 0.0, 0.2, {}, 40, 0.0};
  double ema_momentum = 0.99;
  SearchSettings quant_search;
  TrainSchedule finetune{40, 128, 0.0008, "adam", 0.9, 0.0, 0.2, {}, 40, 0.0};
  int phase1_wb = 9, phase1_ab = 9;
  space::PimGenome phase1_pim{256, 8, 2};

  void validate() const;
  pim::HardwareParams hardware_params() const;
};

nlohmann::json to_json_value(const RunConfig& c);
RunConfig from_json_value(const nlohmann::json& j);

/// Built-in defaults, optionally overlaid with a JSON config file, then with
/// `key.path=value` overrides (value parsed as JSON, else taken as a string).
RunConfig load_config(const std::filesystem::path& file, const std::vector<std::string>& overrides);

/// Learning rate for `epoch` under the schedule.
double schedule_lr(const TrainSchedule& s, int epoch);

}  // namespace pimnas::pipeline
