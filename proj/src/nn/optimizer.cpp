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

#include "pimnas/nn/optimizer.hpp"

#include <cmath>

namespace pimnas::nn {

template <typename T>
Optimizer<T>::Optimizer(OptimizerConfig config) : config_(config) {
  if (!(config_.learning_rate > 0.0)) {
    throw EngineError("optimizer learning rate must be positive");
  }
}

template <typename T>
void Optimizer<T>::set_learning_rate(double lr) {
  if (!(lr > 0.0)) throw EngineError("optimizer learning rate must be positive");
  config_.learning_rate = lr;
}

template <typename T>
void Optimizer<T>::step(std::span<Param<T>* const> params) {
  for (Param<T>* p : params) {
    if (!p->trainable || !p->touched()) continue;
    for_each_prefix(p->shape, p->active, [&](std::size_t i) {
      if (!std::isfinite(static_cast<double>(p->grad[i]))) {
        throw EngineError("non-finite gradient in parameter " + p->name + " at element " +
                          std::to_string(i));
      }
    });
  }

  const double lr = config_.learning_rate;
  for (Param<T>* p : params) {
    if (!p->trainable || !p->touched()) continue;
    Slot& slot = slots_[p->name];
    if (slot.m.empty()) slot.m.assign(p->size(), T(0));
    ++slot.steps;
    if (config_.kind == OptimizerKind::kSgd) {
      const double mu = config_.momentum;
      for_each_prefix(p->shape, p->active, [&](std::size_t i) {
        const double g = p->grad[i] + config_.weight_decay * p->value[i];
        const double buf = mu * slot.m[i] + g;
        slot.m[i] = static_cast<T>(buf);
        p->value[i] = static_cast<T>(p->value[i] - lr * buf);
      });
    } else {
      if (slot.v.empty()) slot.v.assign(p->size(), T(0));
      const double b1 = config_.beta1, b2 = config_.beta2;
      const double c1 = 1.0 - std::pow(b1, static_cast<double>(slot.steps));
      const double c2 = 1.0 - std::pow(b2, static_cast<double>(slot.steps));
      for_each_prefix(p->shape, p->active, [&](std::size_t i) {
        const double g = p->grad[i] + config_.weight_decay * p->value[i];
        const double m = b1 * slot.m[i] + (1.0 - b1) * g;
        const double v = b2 * slot.v[i] + (1.0 - b2) * g * g;
        slot.m[i] = static_cast<T>(m);
        slot.v[i] = static_cast<T>(v);
        p->value[i] =
            static_cast<T>(p->value[i] - lr * (m / c1) / (std::sqrt(v / c2) + config_.epsilon));
      });
    }
  }
}

template <typename T>
std::int64_t Optimizer<T>::step_count(const std::string& param) const {
  auto it = slots_.find(param);
  return it == slots_.end() ? 0 : it->second.steps;
}

template <typename T>
const std::vector<T>& Optimizer<T>::first_moment(const std::string& param) const {
  static const std::vector<T> kEmpty;
  auto it = slots_.find(param);
  return it == slots_.end() ? kEmpty : it->second.m;
}

template class Optimizer<float>;
template class Optimizer<double>;

}  // namespace pimnas::nn
