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

#include "pimnas/nn/optimizer.hpp"
#include "pimnas/pipeline/datasets.hpp"
#include "pimnas/supernet/supernet.hpp"

namespace pimnas::testing {

// 8px, four classes, two quantizable-layer-friendly channel widths.
inline space::SearchSpace tiny_space() {
  space::SearchSpace s = space::SearchSpace::desk();
  s.name = "tiny";
  s.image_size = 8;
  s.num_classes = 4;
  s.channel_choices = {8, 16};
  s.head_pool = 2;
  return s;
}

inline pipeline::Dataset tiny_data(std::uint64_t seed, int train = 512, double noise = 0.3) {
  pipeline::SyntheticParams p;
  p.num_classes = 4;
  p.image_size = 8;
  p.train = train;
  p.val = 200;
  p.test = 200;
  p.noise = noise;
  p.clutter = 0;
  p.jitter = 1;
  return pipeline::make_synthetic(p, seed);
}

// Plain full-precision training of one architecture on its own parameter set.
inline nn::ParamStore<float> train_fp(const space::SearchSpace& s, const space::ArchGenome& arch,
                                      const nn::ImageSet& data, int epochs, std::uint64_t seed) {
  Rng rng(seed);
  nn::ParamStore<float> store = supernet::init_supernet_params(s, rng);
  nn::OptimizerConfig oc;
  oc.learning_rate = 0.05;
  nn::Optimizer<float> opt(oc);
  for (int e = 0; e < epochs; ++e) {
    nn::BatchPlan plan(data.size(), 32, &rng);
    for (std::size_t b = 0; b < plan.batches(); ++b) {
      supernet::train_arch_step(store, s, arch, plan.make(data, b), opt);
    }
  }
  return store;
}

}  // namespace pimnas::testing
