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


#include "pimnas/supernet/network.hpp"

#include <cmath>
#include <random>

namespace pimnas::supernet {

using space::BlockType;

BlockParamNames block_param_names(int slot, BlockType type) {
  const std::string p = space::block_prefix(slot, type);
  BlockParamNames n;
  n.conv1 = p + ".conv1";
  n.conv2 = p + ".conv2";
  n.bn1 = p + ".bn1";
  n.bn2 = p + ".bn2";
  if (type == BlockType::kRes) {
    n.shortcut = p + ".shortcut";
    n.bnsc = p + ".bnsc";
  }
  return n;
}

namespace {

void add_conv(ParamStore<float>& st, const std::string& name, int out, int in, int k, Rng& rng) {
  auto& p = st.add(name + ".w", {out, in, k, k});
  std::normal_distribution<double> d(0.0, std::sqrt(2.0 / (in * k * k)));
  for (float& v : p.value) v = static_cast<float>(d(rng));
}

void add_bn(ParamStore<float>& st, const std::string& name, int c) {
  auto& g = st.add(name + ".gamma", {c});
  std::fill(g.value.begin(), g.value.end(), 1.0f);
  st.add(name + ".beta", {c});
  st.add(name + ".mean", {c}, false);
  auto& v = st.add(name + ".var", {c}, false);
  std::fill(v.value.begin(), v.value.end(), 1.0f);
}

template <typename T>
nn::BatchNorm2d<T> make_bn(ParamStore<T>& st, const std::string& name, int c) {
  return nn::BatchNorm2d<T>(name, &st.get(name + ".gamma"), &st.get(name + ".beta"),
                            &st.get(name + ".mean"), &st.get(name + ".var"), c);
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  if (!(a.shape() == b.shape())) {
    throw nn::EngineError("residual add: shapes " + a.shape().str() + " and " + b.shape().str() + " differ");
  }
  Tensor<T> out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out.vec()[i] += b.vec()[i];
  return out;
}

}  // namespace

ParamStore<float> init_supernet_params(const space::SearchSpace& s, Rng& rng) {
  s.validate();
  ParamStore<float> st;
  const int cmax = s.max_channels();
  for (int slot = 0; slot < s.d_max; ++slot) {
    const int in_max = slot == 0 ? s.image_channels : cmax;
    for (BlockType t : s.block_types) {
      const BlockParamNames n = block_param_names(slot, t);
      add_conv(st, n.conv1, cmax, in_max, 3, rng);
      add_bn(st, n.bn1, cmax);
      add_conv(st, n.conv2, cmax, cmax, 3, rng);
      add_bn(st, n.bn2, cmax);
      if (t == BlockType::kRes) {
        add_conv(st, n.shortcut, cmax, in_max, 1, rng);
        add_bn(st, n.bnsc, cmax);
      }
    }
  }
  const int features = cmax * s.head_pool * s.head_pool;
  auto& w = st.add(kHeadWeight, {s.num_classes, features});
  std::normal_distribution<double> d(0.0, std::sqrt(1.0 / features));
  for (float& v : w.value) v = static_cast<float>(d(rng));
  st.add(kHeadBias, {s.num_classes});
  return st;
}

template <typename T>
Network<T>::Network(const space::SearchSpace& s, const space::ArchGenome& arch, ParamStore<T>& store)
    : space_(s), arch_(arch), aap_(s.head_pool, s.head_pool) {
  const std::string bad = space::arch_violation(arch, s);
  if (!bad.empty()) throw space::GenomeError("infeasible architecture '" + space::encode(arch) + "': " + bad);
  blocks_.reserve(arch.blocks.size());
  int in_ch = s.image_channels;
  for (int slot = 0; slot < arch.depth(); ++slot) {
    const space::BlockGene& g = arch.blocks[slot];
    const BlockParamNames n = block_param_names(slot, g.type);
    const int c = g.out_channels;
    Block b{g.type, {}, {}, {}, {}, {}, {}, {}, {}, {}};
    b.conv1.emplace(n.conv1, &store.get(n.conv1 + ".w"), in_ch, c, 3, g.stride, 1);
    b.bn1.emplace(make_bn(store, n.bn1, c));
    b.conv2.emplace(n.conv2, &store.get(n.conv2 + ".w"), c, c, 3, 1, 1);
    b.bn2.emplace(make_bn(store, n.bn2, c));
    if (g.type == BlockType::kRes) {
      b.shortcut.emplace(n.shortcut, &store.get(n.shortcut + ".w"), in_ch, c, 1, g.stride, 0);
      b.bnsc.emplace(make_bn(store, n.bnsc, c));
    }
    blocks_.push_back(std::move(b));
    in_ch = c;
  }
  fc_.emplace("head.fc", &store.get(kHeadWeight), &store.get(kHeadBias),
              in_ch * s.head_pool * s.head_pool, s.num_classes);
}

template <typename T>
Tensor<T> Network<T>::forward_block(Block& b, const Tensor<T>& x, Mode mode) {
  Tensor<T> h = b.relu1.forward(b.bn1->forward(b.conv1->forward(x, mode), mode));
  if (b.type == BlockType::kRes) {
    Tensor<T> main = b.bn2->forward(b.conv2->forward(h, mode), mode);
    Tensor<T> side = b.bnsc->forward(b.shortcut->forward(x, mode), mode);
    return b.relu2.forward(add(main, side));
  }
  h = b.relu2.forward(b.bn2->forward(b.conv2->forward(h, mode), mode));
  if (b.type == BlockType::kVgg) h = b.pool.forward(h);
  return h;
}

template <typename T>
Tensor<T> Network<T>::backward_block(Block& b, const Tensor<T>& g) {
  if (b.type == BlockType::kRes) {
    Tensor<T> gs = b.relu2.backward(g);
    Tensor<T> gx_side = b.shortcut->backward(b.bnsc->backward(gs));
    Tensor<T> gh = b.conv2->backward(b.bn2->backward(gs));
    Tensor<T> gx = b.conv1->backward(b.bn1->backward(b.relu1.backward(gh)));
    return add(gx, gx_side);
  }
  Tensor<T> gh = b.type == BlockType::kVgg ? b.pool.backward(g) : g;
  gh = b.conv2->backward(b.bn2->backward(b.relu2.backward(gh)));
  return b.conv1->backward(b.bn1->backward(b.relu1.backward(gh)));
}

template <typename T>
Tensor<T> Network<T>::forward(const Tensor<T>& x, Mode mode) {
  const nn::Shape4& s = x.shape();
  if (s.c != space_.image_channels || s.h != space_.image_size || s.w != space_.image_size) {
    throw nn::EngineError("network input " + s.str() + " does not match image geometry " +
                          std::to_string(space_.image_channels) + "x" + std::to_string(space_.image_size) +
                          "x" + std::to_string(space_.image_size));
  }
  Tensor<T> h = x;
  for (Block& b : blocks_) h = forward_block(b, h, mode);
  return fc_->forward(aap_.forward(h), mode);
}

template <typename T>
Tensor<T> Network<T>::backward(const Tensor<T>& grad_logits) {
  Tensor<T> g = aap_.backward(fc_->backward(grad_logits));
  for (auto it = blocks_.rbegin(); it != blocks_.rend(); ++it) g = backward_block(*it, g);
  return g;
}

template <typename T>
void Network<T>::set_quant(const space::QuantGenome* q, quant::QuantState* state) {
  std::vector<nn::Conv2d<T>*> cs = convs();
  if (!q) {
    for (auto* c : cs) c->set_quant(std::nullopt);
    fc_->set_quant(std::nullopt);
    return;
  }
  if (!state) throw nn::EngineError("quantization requested without a scale state");
  if (q->layers.size() != cs.size()) {
    throw space::GenomeError("bit-width map has " + std::to_string(q->layers.size()) +
                             " entries, architecture '" + space::encode(arch_) + "' has " +
                             std::to_string(cs.size()) + " quantizable layers");
  }
  for (std::size_t i = 0; i < cs.size(); ++i) {
    const space::LayerBits& b = q->layers[i];
    cs[i]->set_quant(nn::QuantHook{b.weight_bits, b.act_bits, &state->scale(cs[i]->name(), b.act_bits)});
  }
  const int hb = space_.head_bits;
  fc_->set_quant(nn::QuantHook{hb, hb, &state->scale(fc_->name(), hb)});
}

template <typename T>
std::vector<nn::Conv2d<T>*> Network<T>::convs() {
  std::vector<nn::Conv2d<T>*> out;
  for (Block& b : blocks_) {
    out.push_back(&*b.conv1);
    out.push_back(&*b.conv2);
    if (b.shortcut) out.push_back(&*b.shortcut);
  }
  return out;
}

template <typename T>
std::vector<nn::BatchNorm2d<T>*> Network<T>::batch_norms() {
  std::vector<nn::BatchNorm2d<T>*> out;
  for (Block& b : blocks_) {
    out.push_back(&*b.bn1);
    out.push_back(&*b.bn2);
    if (b.bnsc) out.push_back(&*b.bnsc);
  }
  return out;
}

template <typename T>
void Network<T>::begin_bn_calibration() {
  for (auto* bn : batch_norms()) bn->begin_calibration();
}

template <typename T>
void Network<T>::finish_bn_calibration() {
  for (auto* bn : batch_norms()) bn->finish_calibration();
}

template class Network<float>;
template class Network<double>;

}  // namespace pimnas::supernet
