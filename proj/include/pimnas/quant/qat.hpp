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
#include <memory>
#include <string>
#include <vector>

#include "pimnas/nn/data.hpp"
#include "pimnas/nn/optimizer.hpp"
#include "pimnas/quant/quant_state.hpp"
#include "pimnas/space/search_space.hpp"
#include "pimnas/supernet/network.hpp"

namespace pimnas::quant {

struct QatStepResult {
  double loss = 0.0;
  space::QuantGenome bits;
};

/// Mixed-precision supernet update on a fixed architecture: one (wb, ab)
/// pair per quantizable layer is drawn uniformly from the space's bit
/// domains, then a fake-quantized forward/backward and optimizer step run.
QatStepResult quant_supernet_train_step(nn::ParamStore<float>& store, const space::SearchSpace& s,
                                        const space::ArchGenome& arch, QuantState& state,
                                        const nn::Batch& batch, Rng& rng, nn::Optimizer<float>& opt);

/// Geometry and precision of one integer matrix-vector product batch:
/// acc[o][p] = sum_r w[o][r] * x[r][p].
struct MvmShape {
  std::string layer;
  int out = 0;
  int rows = 0;
  int pixels = 0;
  int weight_bits = 0;
  int act_bits = 0;
};

class MvmBackend {
 public:
  virtual ~MvmBackend() = default;
  /// w: out x rows codes, x: rows x pixels codes, acc: out x pixels.
  virtual void mvm(const MvmShape& shape, const std::int32_t* w, const std::int32_t* x,
                   std::int64_t* acc) = 0;
};

/// Exact integer accumulation.
class IdealBackend : public MvmBackend {
 public:
  void mvm(const MvmShape& shape, const std::int32_t* w, const std::int32_t* x, std::int64_t* acc) override;
};

/// Quantized inference in the integer code domain: every convolution and
/// the head compute int64 accumulations of weight and activation codes via
/// a backend, rescale by (alpha_w / theta_w) * (alpha_a / theta_a), and
/// continue in double precision through batch norm, ReLU and pooling.
/// Activation scales are frozen; weights are never modified.
class QuantizedNetwork {
 public:
  QuantizedNetwork(const space::SearchSpace& s, const space::ArchGenome& arch,
                   const nn::ParamStore<float>& store, const space::QuantGenome& quant, const QuantState& state);

  nn::Tensor<double> forward(const nn::Tensor<float>& x, MvmBackend& backend);
  std::vector<int> predict(const nn::ImageSet& data, MvmBackend& backend, int batch_size = 100);

  struct LayerCodes {
    std::string name;
    int weight_bits = 0, act_bits = 0;
    double weight_alpha = 0.0, act_alpha = 0.0;
    std::vector<std::int32_t> weights;  // out x rows
  };
  const std::vector<LayerCodes>& layers() const { return layers_; }

 private:
  nn::Tensor<double> conv(std::size_t layer, const nn::Conv2d<double>& geom, const nn::Tensor<double>& x,
                          MvmBackend& backend);
  nn::Tensor<double> head(const nn::Tensor<double>& x, MvmBackend& backend);

  space::SearchSpace space_;
  space::ArchGenome arch_;
  nn::ParamStore<double> params_;
  std::unique_ptr<supernet::Network<double>> net_;  // layer geometry, batch norm and pooling
  std::vector<LayerCodes> layers_;                  // quantizable convs, then the head
};

/// Apply a bit-width map to a float model and evaluate it with frozen
/// scales (fake quantization).
std::vector<int> fake_quant_predict(nn::ParamStore<float>& store, const space::SearchSpace& s,
                                    const space::ArchGenome& arch, const space::QuantGenome& quant,
                                    QuantState& state, const nn::ImageSet& data, int batch_size = 256);

}  // namespace pimnas::quant
