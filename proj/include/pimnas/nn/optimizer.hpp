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
#include <map>
#include <span>
#include <string>
#include <vector>

#include "pimnas/nn/param.hpp"

namespace pimnas::nn {

enum class OptimizerKind { kSgd, kAdam };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::kSgd;
  double learning_rate = 0.1;
  double momentum = 0.9;  // sgd
  double beta1 = 0.9;     // adam
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.0;
};

/// SGD with momentum, or Adam. Only the active prefix region of each touched
/// parameter is updated, so parameters and moment buffers outside the
/// sampled path keep their exact bytes.
template <typename T>
class Optimizer {
 public:
  explicit Optimizer(OptimizerConfig config);

  /// Applies one update. Throws EngineError naming the first parameter whose
  /// active gradient holds a non-finite value; nothing is modified then.
  void step(std::span<Param<T>* const> params);
  void step(ParamStore<T>& store) {
    auto touched = store.touched();
    step(std::span<Param<T>* const>(touched));
  }

  double learning_rate() const { return config_.learning_rate; }
  void set_learning_rate(double lr);
  const OptimizerConfig& config() const { return config_; }
  std::int64_t step_count(const std::string& param) const;

  /// Moment buffers of one parameter (empty when never stepped).
  const std::vector<T>& first_moment(const std::string& param) const;

 private:
  struct Slot {
    std::vector<T> m;
    std::vector<T> v;
    std::int64_t steps = 0;
  };

  OptimizerConfig config_;
  std::map<std::string, Slot> slots_;
};

}  // namespace pimnas::nn
