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
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pimnas/nn/param.hpp"

namespace pimnas::nn {

/// One tensor in a checkpoint file.
struct NamedTensor {
  std::vector<int> shape;
  std::vector<float> data;
};

/// Versioned binary container of named float32 tensors plus a JSON header.
///
/// Layout (all integers little-endian u32):
///   "PIMNASCK" | version | header_len | header (UTF-8 JSON) |
///   tensor_count | { name_len | name | rank | dims[rank] | f32 data } ...
struct Checkpoint {
  static constexpr std::uint32_t kVersion = 1;

  nlohmann::json header = nlohmann::json::object();
  std::map<std::string, NamedTensor> tensors;

  void save(const std::filesystem::path& path) const;
  static Checkpoint load(const std::filesystem::path& path);

  void put_params(const ParamStore<float>& store, const std::string& prefix = "");
  /// Copies every checkpoint tensor under `prefix` into `store`, creating
  /// parameters that do not exist yet. Shapes of existing parameters must match.
  void get_params(ParamStore<float>& store, const std::string& prefix = "") const;
};

}  // namespace pimnas::nn
