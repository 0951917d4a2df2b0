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


#include "pimnas/pim/hardware.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace pimnas::pim {

namespace {

constexpr double kJouleToMilli = 1e3;
constexpr double kSecondToMilli = 1e3;

int ceil_div(long long a, long long b) { return static_cast<int>((a + b - 1) / b); }

}  // namespace

void HardwareParams::validate() const {
  auto fail = [](const std::string& m) { throw HardwareError("hardware parameters: " + m); };
  if (tile_rows < 1 || tile_cols < 1 || pe_per_tile < 1 || crossbars_per_pe < 1) fail("organization counts must be >= 1");
  if (device_bits != 1) fail("only 1-bit devices are modelled");
  if (mux_ratio < 1) fail("mux_ratio must be >= 1");
  if (a_ref_xbar < 1) fail("a_ref_xbar must be >= 1");
  for (double v : {e_cell, e_dac0, e_adc0, e_shiftadd, e_buffer, e_pool, e_add, e_layer, t_dac, t_xbar, t_adc,
                   t_shiftadd, t_layer, a_xbar0, a_adc0, a_dac0}) {
    if (!(v > 0.0) || !std::isfinite(v)) fail("every unit constant must be positive and finite");
  }
}

void to_json(nlohmann::json& j, const HardwareParams& h) {
  j = nlohmann::json{{"tile_rows", h.tile_rows},   {"tile_cols", h.tile_cols},
                     {"pe_per_tile", h.pe_per_tile}, {"crossbars_per_pe", h.crossbars_per_pe},
                     {"device_bits", h.device_bits}, {"mux_ratio", h.mux_ratio},
                     {"e_cell", h.e_cell},           {"e_dac0", h.e_dac0},
                     {"e_adc0", h.e_adc0},           {"e_shiftadd", h.e_shiftadd},
                     {"e_buffer", h.e_buffer},       {"e_pool", h.e_pool},
                     {"e_add", h.e_add},             {"e_layer", h.e_layer},
                     {"t_dac", h.t_dac},             {"t_xbar", h.t_xbar},
                     {"t_adc", h.t_adc},             {"t_shiftadd", h.t_shiftadd},
                     {"t_layer", h.t_layer},         {"a_xbar0", h.a_xbar0},
                     {"a_ref_xbar", h.a_ref_xbar},   {"a_adc0", h.a_adc0},
                     {"a_dac0", h.a_dac0}};
}

void from_json(const nlohmann::json& j, HardwareParams& h) {
  HardwareParams d;
  const nlohmann::json defaults = d;
  for (const auto& [key, value] : j.items()) {
    if (!defaults.contains(key)) throw HardwareError("hardware parameters: unknown key '" + key + "'");
  }
#define PIMNAS_FIELD(f) d.f = j.value(#f, d.f)
  PIMNAS_FIELD(tile_rows);
  PIMNAS_FIELD(tile_cols);
  PIMNAS_FIELD(pe_per_tile);
  PIMNAS_FIELD(crossbars_per_pe);
  PIMNAS_FIELD(device_bits);
  PIMNAS_FIELD(mux_ratio);
  PIMNAS_FIELD(e_cell);
  PIMNAS_FIELD(e_dac0);
  PIMNAS_FIELD(e_adc0);
  PIMNAS_FIELD(e_shiftadd);
  PIMNAS_FIELD(e_buffer);
  PIMNAS_FIELD(e_pool);
  PIMNAS_FIELD(e_add);
  PIMNAS_FIELD(e_layer);
  PIMNAS_FIELD(t_dac);
  PIMNAS_FIELD(t_xbar);
  PIMNAS_FIELD(t_adc);
  PIMNAS_FIELD(t_shiftadd);
  PIMNAS_FIELD(t_layer);
  PIMNAS_FIELD(a_xbar0);
  PIMNAS_FIELD(a_ref_xbar);
  PIMNAS_FIELD(a_adc0);
  PIMNAS_FIELD(a_dac0);
#undef PIMNAS_FIELD
  d.validate();
  h = d;
}

HardwareParams HardwareParams::load(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw HardwareError("cannot open hardware table " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(is);
  } catch (const nlohmann::json::exception& e) {
    throw HardwareError(path.string() + ": " + e.what());
  }
  return j.get<HardwareParams>();
}

void HardwareParams::save(const std::filesystem::path& path) const {
  std::ofstream os(path);
  if (!os) throw HardwareError("cannot write hardware table " + path.string());
  os << nlohmann::json(*this).dump(2) << "\n";
}

LayerMapping map_layer(const space::LayerDesc& layer, const space::PimGenome& pim, int wb, int ab) {
  if (pim.xbar < 1 || pim.dac_bits < 1 || wb < 1 || ab < 1) {
    throw HardwareError("map_layer: crossbar size, DAC bits and bit widths must be >= 1");
  }
  LayerMapping m;
  m.rows = layer.rows();
  m.cols = layer.out_channels * wb;
  m.xbars_r = ceil_div(m.rows, pim.xbar);
  m.xbars_c = ceil_div(m.cols, pim.xbar);
  m.n_crossbars = m.xbars_r * m.xbars_c;
  m.cycles_per_mvm = ceil_div(ab, pim.dac_bits);
  m.mvm_count = static_cast<long long>(layer.out_h) * layer.out_w;
  return m;
}

double HardwareReport::penalized_edp() const {
  const double factor = utilization > 1.0 ? std::ceil(utilization) : 1.0;
  return energy * latency * factor;
}

nlohmann::json to_json(const HardwareReport& r) {
  nlohmann::json layers = nlohmann::json::array();
  for (const LayerCost& c : r.layers) {
    const LayerMapping& m = c.mapping;
    layers.push_back({{"name", c.name},
                      {"weight_bits", c.weight_bits},
                      {"act_bits", c.act_bits},
                      {"rows", m.rows},
                      {"cols", m.cols},
                      {"xbars_r", m.xbars_r},
                      {"xbars_c", m.xbars_c},
                      {"n_crossbars", m.n_crossbars},
                      {"cycles_per_mvm", m.cycles_per_mvm},
                      {"mvm_count", m.mvm_count},
                      {"energy_mj", c.energy},
                      {"latency_ms", c.latency},
                      {"area_mm2", c.area}});
  }
  return {{"energy_mj", r.energy},         {"latency_ms", r.latency}, {"area_mm2", r.area},
          {"edp", r.edp},                  {"utilization", r.utilization},
          {"over_capacity", r.over_capacity}, {"crossbars", r.crossbars}, {"layers", layers}};
}

HardwareReport estimate_layers(const std::vector<space::LayerDesc>& layers,
                               const std::vector<space::LayerBits>& bits, const space::PimGenome& pim,
                               const HardwareParams& hw) {
  hw.validate();
  if (layers.size() != bits.size()) throw HardwareError("estimate_layers: one bit-width pair per layer required");
  if (pim.adc_bits < 1) throw HardwareError("estimate_layers: ADC resolution must be >= 1");
  HardwareReport r;
  const double adc_scale = std::ldexp(1.0, pim.adc_bits);
  const double X = pim.xbar;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const space::LayerDesc& L = layers[i];
    LayerCost c;
    c.name = L.name;
    c.weight_bits = bits[i].weight_bits;
    c.act_bits = bits[i].act_bits;
    c.mapping = map_layer(L, pim, c.weight_bits, c.act_bits);
    const LayerMapping& m = c.mapping;
    const double R = m.rows, C = m.cols;
    const double steps = static_cast<double>(m.mvm_count) * m.cycles_per_mvm;

    const double per_cycle = R * C * hw.e_cell                          // occupied cells
                             + R * m.xbars_c * pim.dac_bits * hw.e_dac0  // row drivers per column group
                             + C * m.xbars_r * (hw.e_adc0 * adc_scale + hw.e_shiftadd);
    const double in_elems = static_cast<double>(L.in_channels) * L.in_h * L.in_w;
    const double out_elems = static_cast<double>(L.out_channels) * L.out_h * L.out_w;
    const double joules = steps * per_cycle + hw.e_buffer * (in_elems + out_elems) +
                          hw.e_pool * L.pooled_elements + hw.e_add * L.residual_elements + hw.e_layer;
    const double seconds =
        steps * (hw.t_dac + hw.t_xbar + hw.mux_ratio * hw.t_adc + m.xbars_r * hw.t_shiftadd) + hw.t_layer;
    const double ratio = X / hw.a_ref_xbar;
    c.area = m.n_crossbars *
             (hw.a_xbar0 * ratio * ratio + (X / hw.mux_ratio) * hw.a_adc0 * adc_scale + X * hw.a_dac0);
    c.energy = joules * kJouleToMilli;
    c.latency = seconds * kSecondToMilli;
    r.energy += c.energy;
    r.latency += c.latency;
    r.area += c.area;
    r.crossbars += m.n_crossbars;
    r.layers.push_back(std::move(c));
  }
  r.edp = r.energy * r.latency;
  r.utilization = static_cast<double>(r.crossbars) / hw.total_crossbars();
  r.over_capacity = r.utilization > 1.0;
  return r;
}

space::QuantGenome uniform_quant(const space::ArchGenome& arch, const space::SearchSpace& s, int wb, int ab) {
  space::QuantGenome q;
  q.layers.assign(space::quantizable_layers(arch, s).size(), space::LayerBits{wb, ab});
  return q;
}

HardwareReport estimate_network(const space::ArchGenome& arch, const space::QuantGenome& quant,
                                const space::PimGenome& pim, const space::SearchSpace& s,
                                const HardwareParams& hw) {
  std::vector<space::LayerDesc> layers = space::network_layers(arch, s);
  if (quant.layers.size() + 1 != layers.size()) {
    throw space::GenomeError("bit-width map has " + std::to_string(quant.layers.size()) +
                             " entries, architecture '" + space::encode(arch) + "' has " +
                             std::to_string(layers.size() - 1) + " quantizable layers");
  }
  std::vector<space::LayerBits> bits = quant.layers;
  bits.push_back({s.head_bits, s.head_bits});
  return estimate_layers(layers, bits, pim, hw);
}

space::Genome reference_genome(const space::SearchSpace& s) {
  space::Genome g;
  const int c = s.max_channels();
  for (int i = 0; i < s.d_max; ++i) g.arch.blocks.push_back({space::BlockType::kVgg, c, 1});
  if (!space::is_feasible(g.arch, s)) {
    for (auto& b : g.arch.blocks) b.type = space::BlockType::kMvgg;
  }
  const int wb = *std::max_element(s.weight_bits.begin(), s.weight_bits.end());
  const int ab = *std::max_element(s.act_bits.begin(), s.act_bits.end());
  g.quant = uniform_quant(g.arch, s, wb, ab);
  g.pim = space::PimGenome{*std::max_element(s.xbar_sizes.begin(), s.xbar_sizes.end()),
                           *std::max_element(s.adc_bits.begin(), s.adc_bits.end()),
                           *std::max_element(s.dac_bits.begin(), s.dac_bits.end())};
  return g;
}

HardwareReport reference_report(const space::SearchSpace& s, const HardwareParams& hw) {
  const space::Genome g = reference_genome(s);
  return estimate_network(g.arch, *g.quant, *g.pim, s, hw);
}

double edp_norm(const HardwareReport& report, const HardwareReport& reference) {
  if (!(reference.edp > 0.0)) throw HardwareError("edp_norm: reference EDP must be positive");
  return report.edp / reference.edp;
}

}  // namespace pimnas::pim
