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


#include "pimnas/quant/qat.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "pimnas/supernet/supernet.hpp"

namespace pimnas::quant {

using nn::Tensor;

QatStepResult quant_supernet_train_step(nn::ParamStore<float>& store, const space::SearchSpace& s,
                                        const space::ArchGenome& arch, QuantState& state,
                                        const nn::Batch& batch, Rng& rng, nn::Optimizer<float>& opt) {
  QatStepResult r;
  const int layers = static_cast<int>(space::quantizable_layers(arch, s).size());
  r.bits = space::sample_quant(layers, s, rng);
  r.loss = supernet::train_arch_step(store, s, arch, batch, opt, &r.bits, &state);
  return r;
}

void IdealBackend::mvm(const MvmShape& shape, const std::int32_t* w, const std::int32_t* x,
                       std::int64_t* acc) {
  using Mat = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const Mat W = Eigen::Map<const Eigen::Matrix<std::int32_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
                    w, shape.out, shape.rows)
                    .cast<std::int64_t>();
  const Mat X = Eigen::Map<const Eigen::Matrix<std::int32_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
                    x, shape.rows, shape.pixels)
                    .cast<std::int64_t>();
  Eigen::Map<Mat>(acc, shape.out, shape.pixels).noalias() = W * X;
}

namespace {

double weight_alpha(const std::vector<double>& w) {
  double a = 0.0;
  for (double v : w) a = std::max(a, std::abs(v));
  return a;
}

std::int32_t code_or_zero(double x, double alpha, int bits) {
  return alpha > 0.0 ? quantize_code(x, alpha, bits) : 0;
}

double rescale(const QuantizedNetwork::LayerCodes& L) {
  if (!(L.weight_alpha > 0.0) || !(L.act_alpha > 0.0)) return 0.0;
  return (L.weight_alpha / theta_for_bits(L.weight_bits)) * (L.act_alpha / theta_for_bits(L.act_bits));
}

Tensor<double> add(const Tensor<double>& a, const Tensor<double>& b) {
  Tensor<double> out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out.vec()[i] += b.vec()[i];
  return out;
}

}  // namespace

QuantizedNetwork::QuantizedNetwork(const space::SearchSpace& s, const space::ArchGenome& arch,
                                   const nn::ParamStore<float>& store, const space::QuantGenome& quant,
                                   const QuantState& state)
    : space_(s), arch_(arch) {
  space::check(space::Genome{arch, quant, {}}, s);
  params_ = supernet::extract_subnet(store, s, arch).cast<double>();
  net_ = std::make_unique<supernet::Network<double>>(s, arch, params_);

  auto scale_of = [&](const std::string& layer, int ab) {
    const EmaScale* e = state.find(layer, ab);
    if (!e || !e->initialized) {
      throw QuantError("activation scale " + QuantState::key(layer, ab) + " has not been calibrated");
    }
    return e->alpha;
  };
  auto encode_weights = [](LayerCodes& L, const std::vector<double>& w) {
    L.weight_alpha = weight_alpha(w);
    L.weights.resize(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) L.weights[i] = code_or_zero(w[i], L.weight_alpha, L.weight_bits);
  };

  std::vector<nn::Conv2d<double>*> convs = net_->convs();
  for (std::size_t i = 0; i < convs.size(); ++i) {
    LayerCodes L;
    L.name = convs[i]->name();
    L.weight_bits = quant.layers[i].weight_bits;
    L.act_bits = quant.layers[i].act_bits;
    L.act_alpha = scale_of(L.name, L.act_bits);
    encode_weights(L, params_.get(L.name + ".w").value);
    layers_.push_back(std::move(L));
  }
  LayerCodes H;
  H.name = net_->head().name();
  H.weight_bits = H.act_bits = s.head_bits;
  H.act_alpha = scale_of(H.name, s.head_bits);
  encode_weights(H, params_.get(supernet::kHeadWeight).value);
  layers_.push_back(std::move(H));
}

Tensor<double> QuantizedNetwork::conv(std::size_t layer, const nn::Conv2d<double>& g, const Tensor<double>& x,
                                      MvmBackend& backend) {
  const LayerCodes& L = layers_[layer];
  const nn::Shape4& s = x.shape();
  const nn::Shape4 os = g.output_shape(s);
  const int k = g.kernel(), stride = g.stride(), pad = g.pad();
  const int rows = s.c * k * k;
  const int pixels = os.h * os.w;
  const MvmShape shape{L.name, os.c, rows, pixels, L.weight_bits, L.act_bits};
  const double sc = rescale(L);

  std::vector<std::int32_t> codes(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) codes[i] = code_or_zero(x.vec()[i], L.act_alpha, L.act_bits);

  Tensor<double> y(os);
  std::vector<std::int32_t> cols(static_cast<std::size_t>(rows) * pixels);
  std::vector<std::int64_t> acc(static_cast<std::size_t>(os.c) * pixels);
  const std::size_t plane = static_cast<std::size_t>(s.h) * s.w;
  for (int n = 0; n < s.n; ++n) {
    const std::int32_t* img = codes.data() + static_cast<std::size_t>(n) * s.c * plane;
    for (int c = 0; c < s.c; ++c) {
      for (int kh = 0; kh < k; ++kh) {
        for (int kw = 0; kw < k; ++kw) {
          std::int32_t* row = cols.data() + static_cast<std::size_t>((c * k + kh) * k + kw) * pixels;
          for (int oh = 0; oh < os.h; ++oh) {
            const int ih = oh * stride - pad + kh;
            for (int ow = 0; ow < os.w; ++ow) {
              const int iw = ow * stride - pad + kw;
              const bool inside = ih >= 0 && ih < s.h && iw >= 0 && iw < s.w;
              row[oh * os.w + ow] = inside ? img[c * plane + ih * s.w + iw] : 0;
            }
          }
        }
      }
    }
    backend.mvm(shape, L.weights.data(), cols.data(), acc.data());
    double* out = y.image(n);
    for (std::size_t i = 0; i < acc.size(); ++i) out[i] = static_cast<double>(acc[i]) * sc;
  }
  return y;
}

Tensor<double> QuantizedNetwork::head(const Tensor<double>& x, MvmBackend& backend) {
  const LayerCodes& L = layers_.back();
  const nn::Shape4& s = x.shape();
  const int features = s.c * s.h * s.w;
  const int classes = space_.num_classes;
  const MvmShape shape{L.name, classes, features, s.n, L.weight_bits, L.act_bits};
  // x as features x batch
  std::vector<std::int32_t> cols(static_cast<std::size_t>(features) * s.n);
  for (int n = 0; n < s.n; ++n) {
    const double* img = x.image(n);
    for (int f = 0; f < features; ++f) {
      cols[static_cast<std::size_t>(f) * s.n + n] = code_or_zero(img[f], L.act_alpha, L.act_bits);
    }
  }
  std::vector<std::int64_t> acc(static_cast<std::size_t>(classes) * s.n);
  backend.mvm(shape, L.weights.data(), cols.data(), acc.data());
  const double sc = rescale(L);
  const auto& bias = params_.get(supernet::kHeadBias).value;
  Tensor<double> y({s.n, classes, 1, 1});
  for (int n = 0; n < s.n; ++n) {
    for (int o = 0; o < classes; ++o) {
      y.at(n, o, 0, 0) = static_cast<double>(acc[static_cast<std::size_t>(o) * s.n + n]) * sc + bias[o];
    }
  }
  return y;
}

Tensor<double> QuantizedNetwork::forward(const Tensor<float>& x, MvmBackend& backend) {
  using nn::Mode;
  Tensor<double> h = x.cast<double>();
  std::size_t base = 0;
  for (auto& b : net_->blocks()) {
    Tensor<double> a = b.relu1.forward(b.bn1->forward(conv(base, *b.conv1, h, backend), Mode::kEval));
    if (b.type == space::BlockType::kRes) {
      Tensor<double> main = b.bn2->forward(conv(base + 1, *b.conv2, a, backend), Mode::kEval);
      Tensor<double> side = b.bnsc->forward(conv(base + 2, *b.shortcut, h, backend), Mode::kEval);
      h = b.relu2.forward(add(main, side));
      base += 3;
    } else {
      h = b.relu2.forward(b.bn2->forward(conv(base + 1, *b.conv2, a, backend), Mode::kEval));
      if (b.type == space::BlockType::kVgg) h = b.pool.forward(h);
      base += 2;
    }
  }
  nn::AdaptiveAvgPool<double> aap(space_.head_pool, space_.head_pool);
  return head(aap.forward(h), backend);
}

std::vector<int> QuantizedNetwork::predict(const nn::ImageSet& data, MvmBackend& backend, int batch_size) {
  nn::BatchPlan plan(data.size(), static_cast<std::size_t>(batch_size), nullptr);
  std::vector<int> out;
  out.reserve(data.size());
  for (std::size_t b = 0; b < plan.batches(); ++b) {
    nn::Batch batch = plan.make(data, b);
    for (int p : nn::argmax_rows(forward(batch.x, backend))) out.push_back(p);
  }
  return out;
}

std::vector<int> fake_quant_predict(nn::ParamStore<float>& store, const space::SearchSpace& s,
                                    const space::ArchGenome& arch, const space::QuantGenome& quant,
                                    QuantState& state, const nn::ImageSet& data, int batch_size) {
  return supernet::predict(store, s, arch, data, batch_size, &quant, &state);
}

}  // namespace pimnas::quant
