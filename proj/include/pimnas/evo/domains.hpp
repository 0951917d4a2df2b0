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

#include <string>
#include <vector>

#include "pimnas/evo/evolution.hpp"
#include "pimnas/space/search_space.hpp"

namespace pimnas::evo {

/// Draws uniformly from `domain` excluding `current` (returns current when
/// the domain has a single value).
int resample_excluding(const std::vector<int>& domain, int current, Rng& rng);

/// Architecture search (depth, block types, channels, RES strides).
class ArchDomain {
 public:
  using Genome = space::ArchGenome;
  explicit ArchDomain(space::SearchSpace s) : space_(std::move(s)) {}

  Genome sample(Rng& rng) const { return space::sample_arch(space_, rng); }
  /// Depth from one parent; each block gene from either parent where both
  /// have the slot, otherwise from the parent that has it.
  Genome crossover(const Genome& a, const Genome& b, Rng& rng) const;
  Genome mutate(const Genome& g, const EvolutionConfig& c, Rng& rng) const;
  bool feasible(const Genome& g) const { return space::is_feasible(g, space_); }
  std::string encode(const Genome& g) const { return space::encode(g); }
  const space::SearchSpace& space() const { return space_; }

 private:
  space::SearchSpace space_;
};

/// Bit-width map plus circuit configuration for a fixed architecture.
class QuantPimDomain {
 public:
  using Genome = space::Genome;
  QuantPimDomain(space::SearchSpace s, space::ArchGenome arch);

  Genome sample(Rng& rng) const;
  Genome crossover(const Genome& a, const Genome& b, Rng& rng) const;
  /// Bit-width genes mutate with quant_prob, circuit genes with pim_prob.
  Genome mutate(const Genome& g, const EvolutionConfig& c, Rng& rng) const;
  bool feasible(const Genome& g) const;
  std::string encode(const Genome& g) const { return space::encode(g); }
  int layers() const { return layers_; }

 private:
  space::SearchSpace space_;
  space::ArchGenome arch_;
  int layers_;
};

}  // namespace pimnas::evo
