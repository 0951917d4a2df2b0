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
#include <optional>
#include <string>
#include <vector>

#include "pimnas/nn/param.hpp"
#include "pimnas/nn/tensor.hpp"
#include "pimnas/quant/quantizer.hpp"

namespace pimnas::nn {

enum class Mode {
  kTrain,      // batch statistics, running-stat updates, EMA scale updates
  kEval,       // running statistics, frozen scales
  kCalibrate,  // batch statistics accumulated into the batch-norm calibrator
};

/// Fake-quantization attached to a conv or fc layer. Bits of 0 disable the
/// corresponding quantizer.
struct QuantHook {
  int weight_bits = 0;
  int act_bits = 0;
  quant::EmaScale* act_scale = nullptr;
};

template <typename T>
class Conv2d {
 public:
  /// `weight` has shape (out_max, in_max, k, k); the layer uses the prefix
  /// slice (out_ch, in_ch, k, k).
  Conv2d(std::string name, Param<T>* weight, int in_ch, int out_ch, int kernel, int stride,
         int pad);

  Tensor<T> forward(const Tensor<T>& x, Mode mode);
  Tensor<T> backward(const Tensor<T>& grad_out);

  void set_quant(std::optional<QuantHook> hook) { quant_ = hook; }
  const std::string& name() const { return name_; }
  int in_channels() const { return in_ch_; }
  int out_channels() const { return out_ch_; }
  int kernel() const { return k_; }
  int stride() const { return stride_; }
  int pad() const { return pad_; }
  Shape4 output_shape(const Shape4& in) const;

  /// Sliced (and, with a hook, fake-quantized) weights as an out x (in*k*k) matrix.
  std::vector<T> effective_weights() const;

 private:
  std::vector<T> gather_weights() const;

  std::string name_;
  Param<T>* weight_;
  int in_ch_, out_ch_, k_, stride_, pad_;
  std::optional<QuantHook> quant_;

  bool has_forward_ = false;
  Tensor<T> input_;                  // post-quantization input
  std::vector<std::uint8_t> x_pass_;  // STE pass mask on the input
  std::vector<T> w_eff_;              // weights used in the forward pass
  std::vector<std::uint8_t> w_pass_;
};

template <typename T>
class BatchNorm2d {
 public:
  static constexpr double kEps = 1e-5;
  static constexpr double kMomentum = 0.1;

  BatchNorm2d(std::string name, Param<T>* gamma, Param<T>* beta, Param<T>* running_mean,
              Param<T>* running_var, int channels);

  Tensor<T> forward(const Tensor<T>& x, Mode mode);
  Tensor<T> backward(const Tensor<T>& grad_out);

  void begin_calibration();
  /// Replaces the running statistics with the mean over calibration batches.
  void finish_calibration();
  int calibration_batches() const { return calib_batches_; }
  const std::string& name() const { return name_; }

 private:
  std::string name_;
  Param<T>* gamma_;
  Param<T>* beta_;
  Param<T>* mean_;
  Param<T>* var_;
  int channels_;

  bool has_forward_ = false;
  bool used_batch_stats_ = false;
  Tensor<T> xhat_;
  std::vector<double> inv_std_;

  std::vector<double> calib_mean_, calib_var_;
  int calib_batches_ = 0;
};

template <typename T>
class ReLU {
 public:
  Tensor<T> forward(const Tensor<T>& x);
  Tensor<T> backward(const Tensor<T>& grad_out);

 private:
  bool has_forward_ = false;
  std::vector<std::uint8_t> mask_;
  Shape4 shape_;
};

/// 2x2 max pooling with stride 2 (floor semantics on odd extents).
template <typename T>
class MaxPool2 {
 public:
  Tensor<T> forward(const Tensor<T>& x);
  Tensor<T> backward(const Tensor<T>& grad_out);

 private:
  bool has_forward_ = false;
  Shape4 in_shape_;
  std::vector<std::size_t> argmax_;
};

/// Adaptive average pooling to a fixed output grid. Window bounds follow
/// start = floor(i * H / out), end = ceil((i + 1) * H / out).
template <typename T>
class AdaptiveAvgPool {
 public:
  AdaptiveAvgPool(int out_h, int out_w) : out_h_(out_h), out_w_(out_w) {}
  Tensor<T> forward(const Tensor<T>& x);
  Tensor<T> backward(const Tensor<T>& grad_out);

 private:
  int out_h_, out_w_;
  bool has_forward_ = false;
  Shape4 in_shape_;
};

/// Fully connected layer over the flattened (c, h, w) input features.
/// `weight` has shape (out_max, in_max); the layer uses the prefix slice.
template <typename T>
class Linear {
 public:
  Linear(std::string name, Param<T>* weight, Param<T>* bias, int in_features, int out_features);

  Tensor<T> forward(const Tensor<T>& x, Mode mode);
  Tensor<T> backward(const Tensor<T>& grad_out);

  void set_quant(std::optional<QuantHook> hook) { quant_ = hook; }
  const std::string& name() const { return name_; }
  int in_features() const { return in_; }
  int out_features() const { return out_; }
  std::vector<T> effective_weights() const;

 private:
  std::vector<T> gather_weights() const;

  std::string name_;
  Param<T>* weight_;
  Param<T>* bias_;
  int in_, out_;
  std::optional<QuantHook> quant_;

  bool has_forward_ = false;
  Shape4 in_shape_;
  std::vector<T> input_;
  std::vector<std::uint8_t> x_pass_;
  std::vector<T> w_eff_;
  std::vector<std::uint8_t> w_pass_;
};

/// Mean softmax cross-entropy over the batch; `grad` receives dL/dlogits.
template <typename T>
double softmax_cross_entropy(const Tensor<T>& logits, std::span<const int> labels,
                             Tensor<T>* grad);

/// Index of the largest logit per sample.
template <typename T>
std::vector<int> argmax_rows(const Tensor<T>& logits);

/// Per-stage quantization of an activation tensor shared by conv and fc.
template <typename T>
void apply_act_quant(const QuantHook& hook, Mode mode, const std::string& layer,
                     std::vector<T>& data, std::vector<std::uint8_t>& pass);

}  // namespace pimnas::nn
