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

#include <map>
#include <string>

#include <nlohmann/json.hpp>

#include "pimnas/quant/quantizer.hpp"

namespace pimnas::quant {

/// Activation scales keyed by (layer, activation bits), so that different
/// bit choices for one layer keep separate EMA tracks.
class QuantState {
 public:
  explicit QuantState(double momentum = 0.99) : momentum_(momentum) {}

  static std::string key(const std::string& layer, int act_bits) {
    return layer + "@" + std::to_string(act_bits);
  }
  EmaScale& scale(const std::string& layer, int act_bits);
  const EmaScale* find(const std::string& layer, int act_bits) const;
  double momentum() const { return momentum_; }
  std::size_t size() const { return scales_.size(); }
  const std::map<std::string, EmaScale>& all() const { return scales_; }

  nlohmann::json to_json() const;
  static QuantState from_json(const nlohmann::json& j);

 private:
  double momentum_;
  std::map<std::string, EmaScale> scales_;
};

}  // namespace pimnas::quant
