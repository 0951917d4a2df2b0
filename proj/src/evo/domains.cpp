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


#include "pimnas/evo/domains.hpp"

#include <algorithm>

namespace pimnas::evo {

namespace {

bool coin(Rng& rng) { return std::uniform_int_distribution<int>(0, 1)(rng) == 1; }

bool chance(double p, Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p; }

std::vector<int> type_ids(const std::vector<space::BlockType>& types) {
  std::vector<int> out;
  for (auto t : types) out.push_back(static_cast<int>(t));
  return out;
}

}  // namespace

int resample_excluding(const std::vector<int>& domain, int current, Rng& rng) {
  std::vector<int> rest;
  for (int v : domain) {
    if (v != current) rest.push_back(v);
  }
  if (rest.empty()) return current;
  return rest[std::uniform_int_distribution<std::size_t>(0, rest.size() - 1)(rng)];
}

space::ArchGenome ArchDomain::crossover(const Genome& a, const Genome& b, Rng& rng) const {
  Genome child;
  const int depth = coin(rng) ? a.depth() : b.depth();
  for (int i = 0; i < depth; ++i) {
    const bool in_a = i < a.depth(), in_b = i < b.depth();
    if (in_a && in_b) {
      space::BlockGene g;
      g.type = coin(rng) ? a.blocks[i].type : b.blocks[i].type;
      g.out_channels = coin(rng) ? a.blocks[i].out_channels : b.blocks[i].out_channels;
      g.stride = coin(rng) ? a.blocks[i].stride : b.blocks[i].stride;
      child.blocks.push_back(g);
    } else {
      child.blocks.push_back(in_a ? a.blocks[i] : b.blocks[i]);
    }
  }
  return child;
}

space::ArchGenome ArchDomain::mutate(const Genome& g, const EvolutionConfig& c, Rng& rng) const {
  Genome child = g;
  const double p = c.mutation_prob;
  if (chance(p, rng)) {
    std::vector<int> depths;
    for (int d = 1; d <= space_.d_max; ++d) depths.push_back(d);
    const int depth = resample_excluding(depths, g.depth(), rng);
    while (child.depth() > depth) child.blocks.pop_back();
    while (child.depth() < depth) {
      space::BlockGene b;
      b.type = space_.block_types[std::uniform_int_distribution<std::size_t>(0, space_.block_types.size() - 1)(rng)];
      b.out_channels =
          space_.channel_choices[std::uniform_int_distribution<std::size_t>(0, space_.channel_choices.size() - 1)(rng)];
      if (b.type == space::BlockType::kRes && space_.res_stride2) b.stride = coin(rng) ? 2 : 1;
      child.blocks.push_back(b);
    }
  }
  const std::vector<int> types = type_ids(space_.block_types);
  for (int i = 0; i < std::min(g.depth(), child.depth()); ++i) {
    space::BlockGene& b = child.blocks[i];
    if (chance(p, rng)) b.type = static_cast<space::BlockType>(resample_excluding(types, static_cast<int>(b.type), rng));
    if (chance(p, rng)) b.out_channels = resample_excluding(space_.channel_choices, b.out_channels, rng);
    if (space_.res_stride2) {
      if (chance(p, rng)) b.stride = b.stride == 1 ? 2 : 1;
      if (b.type != space::BlockType::kRes) b.stride = 1;
    }
  }
  return child;
}

QuantPimDomain::QuantPimDomain(space::SearchSpace s, space::ArchGenome arch)
    : space_(std::move(s)), arch_(std::move(arch)),
      layers_(static_cast<int>(space::quantizable_layers(arch_, space_).size())) {}

space::Genome QuantPimDomain::sample(Rng& rng) const {
  space::Genome g;
  g.arch = arch_;
  g.quant = space::sample_quant(layers_, space_, rng);
  g.pim = space::sample_pim(space_, rng);
  return g;
}

space::Genome QuantPimDomain::crossover(const Genome& a, const Genome& b, Rng& rng) const {
  space::Genome g;
  g.arch = arch_;
  g.quant.emplace();
  for (int i = 0; i < layers_; ++i) {
    space::LayerBits bits;
    bits.weight_bits = (coin(rng) ? a : b).quant->layers[i].weight_bits;
    bits.act_bits = (coin(rng) ? a : b).quant->layers[i].act_bits;
    g.quant->layers.push_back(bits);
  }
  g.pim.emplace();
  g.pim->xbar = (coin(rng) ? a : b).pim->xbar;
  g.pim->adc_bits = (coin(rng) ? a : b).pim->adc_bits;
  g.pim->dac_bits = (coin(rng) ? a : b).pim->dac_bits;
  return g;
}

space::Genome QuantPimDomain::mutate(const Genome& g, const EvolutionConfig& c, Rng& rng) const {
  space::Genome child = g;
  for (auto& bits : child.quant->layers) {
    if (chance(c.quant_prob, rng)) bits.weight_bits = resample_excluding(space_.weight_bits, bits.weight_bits, rng);
    if (chance(c.quant_prob, rng)) bits.act_bits = resample_excluding(space_.act_bits, bits.act_bits, rng);
  }
  auto& p = *child.pim;
  if (chance(c.pim_prob, rng)) p.xbar = resample_excluding(space_.xbar_sizes, p.xbar, rng);
  if (chance(c.pim_prob, rng)) p.adc_bits = resample_excluding(space_.adc_bits, p.adc_bits, rng);
  if (chance(c.pim_prob, rng)) p.dac_bits = resample_excluding(space_.dac_bits, p.dac_bits, rng);
  return child;
}

bool QuantPimDomain::feasible(const Genome& g) const {
  if (!(g.arch == arch_) || !g.quant || !g.pim) return false;
  return space::quant_violation(*g.quant, arch_, space_).empty() && space::pim_violation(*g.pim, space_).empty();
}

}  // namespace pimnas::evo
