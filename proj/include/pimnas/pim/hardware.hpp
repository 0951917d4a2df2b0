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

#include "pimnas/space/search_space.hpp"

namespace pimnas::pim {

class HardwareError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Accelerator organization and unit-cost table. Energies in joules, times
/// in seconds, areas in mm^2. Absolute values are illustrative.
struct HardwareParams {
  int tile_rows = 64;
  int tile_cols = 64;
  int pe_per_tile = 4;  // 2 x 2
  int crossbars_per_pe = 16;
  int device_bits = 1;
  int mux_ratio = 8;  // columns sharing one ADC

  double e_cell = 1e-15;       // per occupied cell per input cycle
  double e_dac0 = 4e-15;       // per row drive per DAC bit
  double e_adc0 = 2e-15;       // per conversion, scaled by 2^adc_bits
  double e_shiftadd = 20e-15;  // per partial-sum accumulation
  double e_buffer = 50e-15;    // per feature-map element read or written
  double e_pool = 10e-15;      // per max-pool input element
  double e_add = 20e-15;       // per residual addition
  double e_layer = 1e-9;       // fixed per-layer overhead (buffers, interconnect)

  double t_dac = 1e-9;
  double t_xbar = 5e-9;
  double t_adc = 1e-9;       // per conversion; mux_ratio conversions per cycle
  double t_shiftadd = 1e-9;  // per row group accumulated
  double t_layer = 1e-6;

  double a_xbar0 = 0.0015;  // crossbar of a_ref_xbar x a_ref_xbar cells
  int a_ref_xbar = 128;
  double a_adc0 = 2e-5;  // per ADC, scaled by 2^adc_bits
  double a_dac0 = 1e-5;  // per row driver

  void validate() const;
  int total_crossbars() const { return tile_rows * tile_cols * pe_per_tile * crossbars_per_pe; }

  static HardwareParams load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;
};

void to_json(nlohmann::json& j, const HardwareParams& h);
void from_json(const nlohmann::json& j, HardwareParams& h);

struct LayerMapping {
  int rows = 0;  // C_in * k * k
  int cols = 0;  // C_out * wb
  int xbars_r = 0;
  int xbars_c = 0;
  int n_crossbars = 0;
  int cycles_per_mvm = 0;  // ceil(ab / dac)
  long long mvm_count = 0; // output pixels
};

LayerMapping map_layer(const space::LayerDesc& layer, const space::PimGenome& pim, int wb, int ab);

struct LayerCost {
  std::string name;
  int weight_bits = 0, act_bits = 0;
  LayerMapping mapping;
  double energy = 0.0;   // mJ
  double latency = 0.0;  // ms
  double area = 0.0;     // mm^2
};

struct HardwareReport {
  double energy = 0.0;   // mJ
  double latency = 0.0;  // ms
  double area = 0.0;     // mm^2
  double edp = 0.0;      // mJ * ms
  double utilization = 0.0;
  bool over_capacity = false;
  int crossbars = 0;
  std::vector<LayerCost> layers;

  /// EDP with latency serialized by ceil(utilization) when over capacity.
  double penalized_edp() const;
};

nlohmann::json to_json(const HardwareReport& r);

/// Costs an explicit layer list with per-layer bit widths.
HardwareReport estimate_layers(const std::vector<space::LayerDesc>& layers,
                               const std::vector<space::LayerBits>& bits, const space::PimGenome& pim,
                               const HardwareParams& hw);

/// Costs a whole network: quantizable layers use the bit-width map, the
/// head uses the space's fixed head precision.
HardwareReport estimate_network(const space::ArchGenome& arch, const space::QuantGenome& quant,
                                const space::PimGenome& pim, const space::SearchSpace& s,
                                const HardwareParams& hw);

/// Uniform bit-width map for an architecture.
space::QuantGenome uniform_quant(const space::ArchGenome& arch, const space::SearchSpace& s, int wb, int ab);

/// EDP normalization baseline: d_max blocks at maximal channels (VGG where
/// the pooling chain fits the input, MVGG otherwise), 9-bit weights and
/// activations, largest crossbar, largest ADC, largest DAC of the space.
space::Genome reference_genome(const space::SearchSpace& s);
HardwareReport reference_report(const space::SearchSpace& s, const HardwareParams& hw);

double edp_norm(const HardwareReport& report, const HardwareReport& reference);

}  // namespace pimnas::pim
