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

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "pimnas/nn/layers.hpp"
#include "pimnas/nn/param.hpp"
#include "pimnas/quant/quant_state.hpp"
#include "pimnas/space/search_space.hpp"

namespace pimnas::supernet {

using nn::Mode;
using nn::ParamStore;
using nn::Tensor;

/// Names of the parameters a block path owns.
struct BlockParamNames {
  std::string conv1, conv2, shortcut;
  std::string bn1, bn2, bnsc;  // prefixes; suffixed with .gamma/.beta/.mean/.var
};
BlockParamNames block_param_names(int slot, space::BlockType type);
inline constexpr const char* kHeadWeight = "head.fc.w";
inline constexpr const char* kHeadBias = "head.fc.b";

/// Creates every supernet parameter at maximal size: for each slot and path,
/// convolutions sized (C_max, C_in_max, k, k) and batch norms sized C_max,
/// plus the shared classifier head sized for C_max input channels.
ParamStore<float> init_supernet_params(const space::SearchSpace& s, Rng& rng);

/// One sampled architecture instantiated over a parameter store. The store
/// may hold maximal supernet tensors (layers use prefix slices) or exactly
/// sized subnet tensors with the same names.
template <typename T>
class Network {
 public:
  Network(const space::SearchSpace& s, const space::ArchGenome& arch, ParamStore<T>& store);
  Network(const Network&) = delete;
  Network& operator=(const Network&) = delete;

  Tensor<T> forward(const Tensor<T>& x, Mode mode);
  /// Returns the gradient with respect to the network input.
  Tensor<T> backward(const Tensor<T>& grad_logits);

  /// Installs per-layer fake quantization (nullptr disables it). The head
  /// uses the space's fixed head precision. Scales come from `state`.
  void set_quant(const space::QuantGenome* q, quant::QuantState* state);

  void begin_bn_calibration();
  void finish_bn_calibration();

  /// Quantizable convolutions in quantizable_layers() order.
  std::vector<nn::Conv2d<T>*> convs();
  std::vector<nn::BatchNorm2d<T>*> batch_norms();
  nn::Linear<T>& head() { return *fc_; }
  const space::ArchGenome& arch() const { return arch_; }
  const space::SearchSpace& space() const { return space_; }

  struct Block {
    space::BlockType type;
    std::optional<nn::Conv2d<T>> conv1, conv2, shortcut;
    std::optional<nn::BatchNorm2d<T>> bn1, bn2, bnsc;
    nn::ReLU<T> relu1, relu2;
    nn::MaxPool2<T> pool;
  };
  std::vector<Block>& blocks() { return blocks_; }

 private:
  Tensor<T> forward_block(Block& b, const Tensor<T>& x, Mode mode);
  Tensor<T> backward_block(Block& b, const Tensor<T>& g);

  space::SearchSpace space_;
  space::ArchGenome arch_;
  std::vector<Block> blocks_;
  nn::AdaptiveAvgPool<T> aap_;
  std::optional<nn::Linear<T>> fc_;
};

extern template class Network<float>;
extern template class Network<double>;

}  // namespace pimnas::supernet
