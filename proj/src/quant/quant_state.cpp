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


#include "pimnas/quant/quant_state.hpp"

namespace pimnas::quant {

EmaScale& QuantState::scale(const std::string& layer, int act_bits) {
  auto [it, inserted] = scales_.try_emplace(key(layer, act_bits));
  if (inserted) it->second.momentum = momentum_;
  return it->second;
}

const EmaScale* QuantState::find(const std::string& layer, int act_bits) const {
  auto it = scales_.find(key(layer, act_bits));
  return it == scales_.end() ? nullptr : &it->second;
}

nlohmann::json QuantState::to_json() const {
  nlohmann::json scales = nlohmann::json::object();
  for (const auto& [k, s] : scales_) {
    if (s.initialized) scales[k] = s.alpha;
  }
  return {{"momentum", momentum_}, {"scales", scales}};
}

QuantState QuantState::from_json(const nlohmann::json& j) {
  QuantState st(j.value("momentum", 0.99));
  for (const auto& [k, v] : j.at("scales").items()) {
    EmaScale s;
    s.momentum = st.momentum_;
    s.alpha = v.get<double>();
    s.initialized = true;
    st.scales_[k] = s;
  }
  return st;
}

}  // namespace pimnas::quant
