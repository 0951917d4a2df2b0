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
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pimnas/nn/data.hpp"
#include "pimnas/nn/optimizer.hpp"
#include "pimnas/supernet/network.hpp"

namespace pimnas::supernet {

/// Weight-shared supernet: every (slot, path) parameter set at maximal size.
class Supernet {
 public:
  Supernet(space::SearchSpace s, std::uint64_t seed);
  Supernet(space::SearchSpace s, ParamStore<float> params);

  const space::SearchSpace& space() const { return space_; }
  ParamStore<float>& params() { return params_; }
  const ParamStore<float>& params() const { return params_; }

  struct StepResult {
    double loss = 0.0;
    space::ArchGenome arch;
  };
  /// Samples one path uniformly, then runs forward, backward and one
  /// optimizer update on exactly that path's slices plus the head.
  StepResult train_step(const nn::Batch& batch, Rng& rng, nn::Optimizer<float>& opt);
  /// Same update for a given path.
  double train_step(const nn::Batch& batch, const space::ArchGenome& arch, nn::Optimizer<float>& opt);

  /// Deep copy of the prefix slices the architecture uses.
  ParamStore<float> extract(const space::ArchGenome& arch) const;

  void save(const std::filesystem::path& path, const nlohmann::json& extra = {}) const;
  /// Refuses checkpoints whose recorded configuration differs from `expected`.
  static Supernet load(const std::filesystem::path& path, const space::SearchSpace& expected);

 private:
  space::SearchSpace space_;
  ParamStore<float> params_;
};

/// Parameter names and active extents used by one architecture.
std::vector<std::pair<std::string, std::vector<int>>> arch_param_extents(const space::SearchSpace& s,
                                                                         const space::ArchGenome& arch);

ParamStore<float> extract_subnet(const ParamStore<float>& supernet, const space::SearchSpace& s,
                                 const space::ArchGenome& arch);

/// One supervised update of a fixed architecture (optionally fake-quantized).
double train_arch_step(ParamStore<float>& store, const space::SearchSpace& s, const space::ArchGenome& arch,
                       const nn::Batch& batch, nn::Optimizer<float>& opt,
                       const space::QuantGenome* quant = nullptr, quant::QuantState* state = nullptr);

/// Replaces batch-norm running statistics of `arch` with the average over
/// `n_batches` batches drawn sequentially from `data`. With a quantization
/// map, uninitialized activation scales are initialized on the first batch.
void recalibrate_bn(ParamStore<float>& store, const space::SearchSpace& s, const space::ArchGenome& arch,
                    const nn::ImageSet& data, int batch_size, int n_batches,
                    const space::QuantGenome* quant = nullptr, quant::QuantState* state = nullptr);

/// Top-1 predictions in evaluation mode.
std::vector<int> predict(ParamStore<float>& store, const space::SearchSpace& s, const space::ArchGenome& arch,
                         const nn::ImageSet& data, int batch_size = 256,
                         const space::QuantGenome* quant = nullptr, quant::QuantState* state = nullptr);

double accuracy(std::span<const int> predictions, std::span<const int> labels);

double evaluate_accuracy(ParamStore<float>& store, const space::SearchSpace& s, const space::ArchGenome& arch,
                         const nn::ImageSet& data, int batch_size = 256,
                         const space::QuantGenome* quant = nullptr, quant::QuantState* state = nullptr);

}  // namespace pimnas::supernet
