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

#include "pimnas/nn/layers.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>

namespace pimnas::nn {

namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename T>
void im2col(const T* img, int channels, int h, int w, int k, int stride, int pad, int ho, int wo,
            T* cols) {
  const std::size_t plane = static_cast<std::size_t>(ho) * wo;
  for (int c = 0; c < channels; ++c) {
    for (int kh = 0; kh < k; ++kh) {
      for (int kw = 0; kw < k; ++kw) {
        T* row = cols + ((static_cast<std::size_t>(c) * k + kh) * k + kw) * plane;
        for (int oh = 0; oh < ho; ++oh) {
          const int ih = oh * stride - pad + kh;
          for (int ow = 0; ow < wo; ++ow) {
            const int iw = ow * stride - pad + kw;
            row[oh * wo + ow] = (ih >= 0 && ih < h && iw >= 0 && iw < w)
                                    ? img[(static_cast<std::size_t>(c) * h + ih) * w + iw]
                                    : T(0);
          }
        }
      }
    }
  }
}

template <typename T>
void col2im(const T* cols, int channels, int h, int w, int k, int stride, int pad, int ho, int wo,
            T* img) {
  const std::size_t plane = static_cast<std::size_t>(ho) * wo;
  for (int c = 0; c < channels; ++c) {
    for (int kh = 0; kh < k; ++kh) {
      for (int kw = 0; kw < k; ++kw) {
        const T* row = cols + ((static_cast<std::size_t>(c) * k + kh) * k + kw) * plane;
        for (int oh = 0; oh < ho; ++oh) {
          const int ih = oh * stride - pad + kh;
          if (ih < 0 || ih >= h) continue;
          for (int ow = 0; ow < wo; ++ow) {
            const int iw = ow * stride - pad + kw;
            if (iw < 0 || iw >= w) continue;
            img[(static_cast<std::size_t>(c) * h + ih) * w + iw] += row[oh * wo + ow];
          }
        }
      }
    }
  }
}

template <typename T>
void quantize_weights(const QuantHook& hook, std::vector<T>& w, std::vector<std::uint8_t>& pass) {
  pass.assign(w.size(), 1);
  if (hook.weight_bits <= 0) return;
  double alpha = 0.0;
  for (T v : w) alpha = std::max(alpha, std::abs(static_cast<double>(v)));
  if (alpha == 0.0) return;  // all-zero weights quantize to themselves
  quant::quantize_tensor<T>(w, w, alpha, hook.weight_bits, pass);
}

void require_forward(bool has_forward, const std::string& layer) {
  if (!has_forward) throw EngineError(layer + ": backward called without a recorded forward pass");
}

}  // namespace

template <typename T>
void apply_act_quant(const QuantHook& hook, Mode mode, const std::string& layer,
                     std::vector<T>& data, std::vector<std::uint8_t>& pass) {
  pass.clear();
  if (hook.act_bits <= 0) return;
  if (hook.act_scale == nullptr) throw EngineError(layer + ": activation quantizer has no scale");
  quant::EmaScale& scale = *hook.act_scale;
  if (mode == Mode::kTrain || (mode == Mode::kCalibrate && !scale.initialized)) {
    scale.observe(quant::batch_moments<T>(data));
  }
  if (!scale.initialized) {
    throw EngineError(layer + ": activation scale used before calibration");
  }
  if (!(scale.alpha > 0.0)) {
    // Degenerate all-zero activations: nothing to quantize.
    pass.assign(data.size(), 1);
    return;
  }
  pass.resize(data.size());
  quant::quantize_tensor<T>(data, data, scale.alpha, hook.act_bits, pass);
}

// ---------------------------------------------------------------- Conv2d

template <typename T>
Conv2d<T>::Conv2d(std::string name, Param<T>* weight, int in_ch, int out_ch, int kernel, int stride,
                  int pad)
    : name_(std::move(name)), weight_(weight), in_ch_(in_ch), out_ch_(out_ch), k_(kernel),
      stride_(stride), pad_(pad) {
  const auto& s = weight_->shape;
  if (s.size() != 4 || s[0] < out_ch || s[1] < in_ch || s[2] != kernel || s[3] != kernel) {
    throw EngineError(name_ + ": weight shape " + shape_str(s) + " cannot hold slice " +
                      shape_str({out_ch, in_ch, kernel, kernel}));
  }
}

template <typename T>
Shape4 Conv2d<T>::output_shape(const Shape4& in) const {
  return {in.n, out_ch_, conv_out_extent(in.h, k_, stride_, pad_),
          conv_out_extent(in.w, k_, stride_, pad_)};
}

template <typename T>
std::vector<T> Conv2d<T>::gather_weights() const {
  return slice_prefix(weight_->value, weight_->shape, {out_ch_, in_ch_, k_, k_});
}

template <typename T>
std::vector<T> Conv2d<T>::effective_weights() const {
  auto w = gather_weights();
  if (quant_) {
    std::vector<std::uint8_t> pass;
    quantize_weights(*quant_, w, pass);
  }
  return w;
}

template <typename T>
Tensor<T> Conv2d<T>::forward(const Tensor<T>& x, Mode mode) {
  const Shape4& s = x.shape();
  if (s.c != in_ch_) {
    throw EngineError(name_ + ": input " + s.str() + " does not match weights " +
                      shape_str({out_ch_, in_ch_, k_, k_}));
  }
  if (s.h + 2 * pad_ < k_ || s.w + 2 * pad_ < k_) {
    throw EngineError(name_ + ": input " + s.str() + " smaller than kernel " + std::to_string(k_));
  }
  const Shape4 os = output_shape(s);
  const int K = in_ch_ * k_ * k_;
  const int P = os.h * os.w;

  w_eff_ = gather_weights();
  w_pass_.assign(w_eff_.size(), 1);
  if (quant_) quantize_weights(*quant_, w_eff_, w_pass_);

  input_ = x;
  x_pass_.clear();
  if (quant_) apply_act_quant(*quant_, mode, name_, input_.vec(), x_pass_);

  Tensor<T> y(os);
  std::vector<T> cols(static_cast<std::size_t>(K) * P);
  Eigen::Map<const RowMat<T>> W(w_eff_.data(), out_ch_, K);
  for (int n = 0; n < s.n; ++n) {
    im2col(input_.image(n), in_ch_, s.h, s.w, k_, stride_, pad_, os.h, os.w, cols.data());
    Eigen::Map<const RowMat<T>> C(cols.data(), K, P);
    Eigen::Map<RowMat<T>> Y(y.image(n), out_ch_, P);
    Y.noalias() = W * C;
  }
  has_forward_ = true;
  return y;
}

template <typename T>
Tensor<T> Conv2d<T>::backward(const Tensor<T>& grad_out) {
  require_forward(has_forward_, name_);
  const Shape4& s = input_.shape();
  const Shape4 os = output_shape(s);
  if (!(grad_out.shape() == os)) {
    throw EngineError(name_ + ": gradient " + grad_out.shape().str() + " does not match output " +
                      os.str());
  }
  const int K = in_ch_ * k_ * k_;
  const int P = os.h * os.w;

  RowMat<T> dW = RowMat<T>::Zero(out_ch_, K);
  Tensor<T> dx(s);
  std::vector<T> cols(static_cast<std::size_t>(K) * P);
  std::vector<T> dcols(static_cast<std::size_t>(K) * P);
  Eigen::Map<const RowMat<T>> W(w_eff_.data(), out_ch_, K);
  for (int n = 0; n < s.n; ++n) {
    im2col(input_.image(n), in_ch_, s.h, s.w, k_, stride_, pad_, os.h, os.w, cols.data());
    Eigen::Map<const RowMat<T>> C(cols.data(), K, P);
    Eigen::Map<const RowMat<T>> G(grad_out.image(n), out_ch_, P);
    dW.noalias() += G * C.transpose();
    Eigen::Map<RowMat<T>> D(dcols.data(), K, P);
    D.noalias() = W.transpose() * G;
    col2im(dcols.data(), in_ch_, s.h, s.w, k_, stride_, pad_, os.h, os.w, dx.image(n));
  }
  if (!x_pass_.empty()) {
    for (std::size_t i = 0; i < dx.size(); ++i) {
      if (!x_pass_[i]) dx.vec()[i] = T(0);
    }
  }

  // Scatter into the prefix region of the full-size gradient.
  const std::vector<int> extent{out_ch_, in_ch_, k_, k_};
  std::size_t j = 0;
  for_each_prefix(weight_->shape, extent, [&](std::size_t i) {
    weight_->grad[i] += w_pass_[j] ? dW.data()[j] : T(0);
    ++j;
  });
  weight_->touch(extent);
  has_forward_ = false;
  input_ = Tensor<T>();
  return dx;
}

// ----------------------------------------------------------- BatchNorm2d

template <typename T>
BatchNorm2d<T>::BatchNorm2d(std::string name, Param<T>* gamma, Param<T>* beta,
                            Param<T>* running_mean, Param<T>* running_var, int channels)
    : name_(std::move(name)), gamma_(gamma), beta_(beta), mean_(running_mean), var_(running_var),
      channels_(channels) {
  for (Param<T>* p : {gamma_, beta_, mean_, var_}) {
    if (p->shape.size() != 1 || p->shape[0] < channels) {
      throw EngineError(name_ + ": parameter " + p->name + " shape " + shape_str(p->shape) +
                        " cannot hold " + std::to_string(channels) + " channels");
    }
  }
}

template <typename T>
Tensor<T> BatchNorm2d<T>::forward(const Tensor<T>& x, Mode mode) {
  const Shape4& s = x.shape();
  if (s.c != channels_) {
    throw EngineError(name_ + ": input " + s.str() + " does not match " +
                      std::to_string(channels_) + " channels");
  }
  const std::size_t plane = static_cast<std::size_t>(s.h) * s.w;
  const std::size_t count = plane * s.n;
  Tensor<T> y(s);
  xhat_ = Tensor<T>(s);
  inv_std_.assign(channels_, 0.0);
  used_batch_stats_ = mode != Mode::kEval;
  if (mode == Mode::kCalibrate && static_cast<int>(calib_mean_.size()) != channels_) {
    begin_calibration();
  }

  for (int c = 0; c < channels_; ++c) {
    double mean, var;
    if (used_batch_stats_) {
      double sum = 0.0;
      for (int n = 0; n < s.n; ++n) {
        const T* p = x.image(n) + c * plane;
        for (std::size_t i = 0; i < plane; ++i) sum += p[i];
      }
      mean = sum / count;
      double sq = 0.0;
      for (int n = 0; n < s.n; ++n) {
        const T* p = x.image(n) + c * plane;
        for (std::size_t i = 0; i < plane; ++i) sq += (p[i] - mean) * (p[i] - mean);
      }
      var = sq / count;
      const double unbiased = count > 1 ? sq / (count - 1) : var;
      if (mode == Mode::kTrain) {
        mean_->value[c] = static_cast<T>((1 - kMomentum) * mean_->value[c] + kMomentum * mean);
        var_->value[c] = static_cast<T>((1 - kMomentum) * var_->value[c] + kMomentum * unbiased);
      } else {
        calib_mean_[c] += mean;
        calib_var_[c] += unbiased;
      }
    } else {
      mean = mean_->value[c];
      var = var_->value[c];
    }
    const double inv = 1.0 / std::sqrt(var + kEps);
    inv_std_[c] = inv;
    const double g = gamma_->value[c];
    const double b = beta_->value[c];
    for (int n = 0; n < s.n; ++n) {
      const T* p = x.image(n) + c * plane;
      T* xh = xhat_.image(n) + c * plane;
      T* q = y.image(n) + c * plane;
      for (std::size_t i = 0; i < plane; ++i) {
        const double v = (p[i] - mean) * inv;
        xh[i] = static_cast<T>(v);
        q[i] = static_cast<T>(g * v + b);
      }
    }
  }
  if (mode == Mode::kTrain) {
    mean_->touch({channels_});
    var_->touch({channels_});
  }
  if (mode == Mode::kCalibrate) ++calib_batches_;
  has_forward_ = true;
  return y;
}

template <typename T>
Tensor<T> BatchNorm2d<T>::backward(const Tensor<T>& grad_out) {
  require_forward(has_forward_, name_);
  const Shape4& s = xhat_.shape();
  if (!(grad_out.shape() == s)) {
    throw EngineError(name_ + ": gradient " + grad_out.shape().str() + " does not match " +
                      s.str());
  }
  const std::size_t plane = static_cast<std::size_t>(s.h) * s.w;
  const double count = static_cast<double>(plane * s.n);
  Tensor<T> dx(s);
  for (int c = 0; c < channels_; ++c) {
    double sum_g = 0.0, sum_gx = 0.0;
    for (int n = 0; n < s.n; ++n) {
      const T* g = grad_out.image(n) + c * plane;
      const T* xh = xhat_.image(n) + c * plane;
      for (std::size_t i = 0; i < plane; ++i) {
        sum_g += g[i];
        sum_gx += g[i] * xh[i];
      }
    }
    gamma_->grad[c] += static_cast<T>(sum_gx);
    beta_->grad[c] += static_cast<T>(sum_g);
    const double scale = gamma_->value[c] * inv_std_[c];
    const double mg = sum_g / count, mgx = sum_gx / count;
    for (int n = 0; n < s.n; ++n) {
      const T* g = grad_out.image(n) + c * plane;
      const T* xh = xhat_.image(n) + c * plane;
      T* d = dx.image(n) + c * plane;
      for (std::size_t i = 0; i < plane; ++i) {
        d[i] = used_batch_stats_ ? static_cast<T>(scale * (g[i] - mg - xh[i] * mgx))
                                 : static_cast<T>(scale * g[i]);
      }
    }
  }
  gamma_->touch({channels_});
  beta_->touch({channels_});
  has_forward_ = false;
  xhat_ = Tensor<T>();
  return dx;
}

template <typename T>
void BatchNorm2d<T>::begin_calibration() {
  calib_mean_.assign(channels_, 0.0);
  calib_var_.assign(channels_, 0.0);
  calib_batches_ = 0;
}

template <typename T>
void BatchNorm2d<T>::finish_calibration() {
  if (calib_batches_ == 0) throw EngineError(name_ + ": calibration saw no batches");
  for (int c = 0; c < channels_; ++c) {
    mean_->value[c] = static_cast<T>(calib_mean_[c] / calib_batches_);
    var_->value[c] = static_cast<T>(calib_var_[c] / calib_batches_);
  }
  calib_batches_ = 0;
}

// ------------------------------------------------------------------ ReLU

template <typename T>
Tensor<T> ReLU<T>::forward(const Tensor<T>& x) {
  Tensor<T> y(x.shape());
  mask_.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const bool on = x.vec()[i] > T(0);
    mask_[i] = on;
    y.vec()[i] = on ? x.vec()[i] : T(0);
  }
  shape_ = x.shape();
  has_forward_ = true;
  return y;
}

template <typename T>
Tensor<T> ReLU<T>::backward(const Tensor<T>& grad_out) {
  require_forward(has_forward_, "relu");
  Tensor<T> dx(shape_);
  for (std::size_t i = 0; i < dx.size(); ++i) dx.vec()[i] = mask_[i] ? grad_out.vec()[i] : T(0);
  has_forward_ = false;
  return dx;
}

// -------------------------------------------------------------- MaxPool2

template <typename T>
Tensor<T> MaxPool2<T>::forward(const Tensor<T>& x) {
  const Shape4& s = x.shape();
  if (s.h < 2 || s.w < 2) throw EngineError("maxpool: input " + s.str() + " smaller than 2x2");
  Shape4 os{s.n, s.c, s.h / 2, s.w / 2};
  Tensor<T> y(os);
  argmax_.assign(os.size(), 0);
  std::size_t o = 0;
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      for (int i = 0; i < os.h; ++i) {
        for (int j = 0; j < os.w; ++j, ++o) {
          std::size_t best = x.index(n, c, 2 * i, 2 * j);
          for (int di = 0; di < 2; ++di) {
            for (int dj = 0; dj < 2; ++dj) {
              const std::size_t idx = x.index(n, c, 2 * i + di, 2 * j + dj);
              if (x.vec()[idx] > x.vec()[best]) best = idx;
            }
          }
          argmax_[o] = best;
          y.vec()[o] = x.vec()[best];
        }
      }
    }
  }
  in_shape_ = s;
  has_forward_ = true;
  return y;
}

template <typename T>
Tensor<T> MaxPool2<T>::backward(const Tensor<T>& grad_out) {
  require_forward(has_forward_, "maxpool");
  Tensor<T> dx(in_shape_);
  for (std::size_t o = 0; o < argmax_.size(); ++o) dx.vec()[argmax_[o]] += grad_out.vec()[o];
  has_forward_ = false;
  return dx;
}

// ------------------------------------------------------- AdaptiveAvgPool

namespace {
inline int window_start(int i, int in, int out) { return (i * in) / out; }
inline int window_end(int i, int in, int out) { return ((i + 1) * in + out - 1) / out; }
}  // namespace

template <typename T>
Tensor<T> AdaptiveAvgPool<T>::forward(const Tensor<T>& x) {
  const Shape4& s = x.shape();
  Tensor<T> y({s.n, s.c, out_h_, out_w_});
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      for (int i = 0; i < out_h_; ++i) {
        const int h0 = window_start(i, s.h, out_h_), h1 = window_end(i, s.h, out_h_);
        for (int j = 0; j < out_w_; ++j) {
          const int w0 = window_start(j, s.w, out_w_), w1 = window_end(j, s.w, out_w_);
          double sum = 0.0;
          for (int a = h0; a < h1; ++a) {
            for (int b = w0; b < w1; ++b) sum += x.at(n, c, a, b);
          }
          y.at(n, c, i, j) = static_cast<T>(sum / ((h1 - h0) * (w1 - w0)));
        }
      }
    }
  }
  in_shape_ = s;
  has_forward_ = true;
  return y;
}

template <typename T>
Tensor<T> AdaptiveAvgPool<T>::backward(const Tensor<T>& grad_out) {
  require_forward(has_forward_, "adaptive_avg_pool");
  const Shape4& s = in_shape_;
  Tensor<T> dx(s);
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      for (int i = 0; i < out_h_; ++i) {
        const int h0 = window_start(i, s.h, out_h_), h1 = window_end(i, s.h, out_h_);
        for (int j = 0; j < out_w_; ++j) {
          const int w0 = window_start(j, s.w, out_w_), w1 = window_end(j, s.w, out_w_);
          const T g = grad_out.at(n, c, i, j) / static_cast<T>((h1 - h0) * (w1 - w0));
          for (int a = h0; a < h1; ++a) {
            for (int b = w0; b < w1; ++b) dx.at(n, c, a, b) += g;
          }
        }
      }
    }
  }
  has_forward_ = false;
  return dx;
}

// ---------------------------------------------------------------- Linear

template <typename T>
Linear<T>::Linear(std::string name, Param<T>* weight, Param<T>* bias, int in_features,
                  int out_features)
    : name_(std::move(name)), weight_(weight), bias_(bias), in_(in_features), out_(out_features) {
  const auto& s = weight_->shape;
  if (s.size() != 2 || s[0] < out_ || s[1] < in_) {
    throw EngineError(name_ + ": weight shape " + shape_str(s) + " cannot hold slice " +
                      shape_str({out_, in_}));
  }
  if (bias_ && (bias_->shape.size() != 1 || bias_->shape[0] < out_)) {
    throw EngineError(name_ + ": bias shape " + shape_str(bias_->shape) + " too small");
  }
}

template <typename T>
std::vector<T> Linear<T>::gather_weights() const {
  return slice_prefix(weight_->value, weight_->shape, {out_, in_});
}

template <typename T>
std::vector<T> Linear<T>::effective_weights() const {
  auto w = gather_weights();
  if (quant_) {
    std::vector<std::uint8_t> pass;
    quantize_weights(*quant_, w, pass);
  }
  return w;
}

template <typename T>
Tensor<T> Linear<T>::forward(const Tensor<T>& x, Mode mode) {
  const Shape4& s = x.shape();
  const int features = s.c * s.h * s.w;
  if (features != in_) {
    throw EngineError(name_ + ": input " + s.str() + " has " + std::to_string(features) +
                      " features, weights expect " + shape_str({out_, in_}));
  }
  w_eff_ = gather_weights();
  w_pass_.assign(w_eff_.size(), 1);
  if (quant_) quantize_weights(*quant_, w_eff_, w_pass_);
  input_ = x.vec();
  x_pass_.clear();
  if (quant_) apply_act_quant(*quant_, mode, name_, input_, x_pass_);

  Tensor<T> y({s.n, out_, 1, 1});
  Eigen::Map<const RowMat<T>> X(input_.data(), s.n, in_);
  Eigen::Map<const RowMat<T>> W(w_eff_.data(), out_, in_);
  Eigen::Map<RowMat<T>> Y(y.data(), s.n, out_);
  Y.noalias() = X * W.transpose();
  if (bias_) {
    for (int n = 0; n < s.n; ++n) {
      for (int o = 0; o < out_; ++o) Y(n, o) += bias_->value[o];
    }
  }
  in_shape_ = s;
  has_forward_ = true;
  return y;
}

template <typename T>
Tensor<T> Linear<T>::backward(const Tensor<T>& grad_out) {
  require_forward(has_forward_, name_);
  const int batch = in_shape_.n;
  if (!(grad_out.shape() == Shape4{batch, out_, 1, 1})) {
    throw EngineError(name_ + ": gradient " + grad_out.shape().str() + " does not match output");
  }
  Eigen::Map<const RowMat<T>> G(grad_out.data(), batch, out_);
  Eigen::Map<const RowMat<T>> X(input_.data(), batch, in_);
  Eigen::Map<const RowMat<T>> W(w_eff_.data(), out_, in_);
  RowMat<T> dW = G.transpose() * X;
  Tensor<T> dx(in_shape_);
  Eigen::Map<RowMat<T>> DX(dx.data(), batch, in_);
  DX.noalias() = G * W;
  if (!x_pass_.empty()) {
    for (std::size_t i = 0; i < dx.size(); ++i) {
      if (!x_pass_[i]) dx.vec()[i] = T(0);
    }
  }
  std::size_t j = 0;
  for_each_prefix(weight_->shape, {out_, in_}, [&](std::size_t i) {
    weight_->grad[i] += w_pass_[j] ? dW.data()[j] : T(0);
    ++j;
  });
  weight_->touch({out_, in_});
  if (bias_) {
    for (int o = 0; o < out_; ++o) {
      double sum = 0.0;
      for (int n = 0; n < batch; ++n) sum += G(n, o);
      bias_->grad[o] += static_cast<T>(sum);
    }
    bias_->touch({out_});
  }
  has_forward_ = false;
  input_.clear();
  return dx;
}

// ------------------------------------------------------------------ loss

template <typename T>
double softmax_cross_entropy(const Tensor<T>& logits, std::span<const int> labels,
                             Tensor<T>* grad) {
  const Shape4& s = logits.shape();
  const int classes = s.c * s.h * s.w;
  if (static_cast<int>(labels.size()) != s.n) {
    throw EngineError("cross-entropy: " + std::to_string(labels.size()) + " labels for batch " +
                      s.str());
  }
  if (grad) *grad = Tensor<T>(s);
  double loss = 0.0;
  for (int n = 0; n < s.n; ++n) {
    const T* z = logits.image(n);
    const int y = labels[n];
    if (y < 0 || y >= classes) {
      throw EngineError("cross-entropy: label " + std::to_string(y) + " out of range");
    }
    double zmax = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < classes; ++k) zmax = std::max(zmax, static_cast<double>(z[k]));
    double denom = 0.0;
    for (int k = 0; k < classes; ++k) denom += std::exp(z[k] - zmax);
    loss += -(z[y] - zmax - std::log(denom));
    if (grad) {
      T* g = grad->image(n);
      for (int k = 0; k < classes; ++k) {
        const double p = std::exp(z[k] - zmax) / denom;
        g[k] = static_cast<T>((p - (k == y ? 1.0 : 0.0)) / s.n);
      }
    }
  }
  return loss / s.n;
}

template <typename T>
std::vector<int> argmax_rows(const Tensor<T>& logits) {
  const Shape4& s = logits.shape();
  const int classes = s.c * s.h * s.w;
  std::vector<int> out(s.n);
  for (int n = 0; n < s.n; ++n) {
    const T* z = logits.image(n);
    out[n] = static_cast<int>(std::max_element(z, z + classes) - z);
  }
  return out;
}

#define PIMNAS_INSTANTIATE(T)                                                               \
  template class Conv2d<T>;                                                                \
  template class BatchNorm2d<T>;                                                           \
  template class ReLU<T>;                                                                  \
  template class MaxPool2<T>;                                                              \
  template class AdaptiveAvgPool<T>;                                                       \
  template class Linear<T>;                                                                \
  template double softmax_cross_entropy<T>(const Tensor<T>&, std::span<const int>,         \
                                           Tensor<T>*);                                    \
  template std::vector<int> argmax_rows<T>(const Tensor<T>&);                              \
  template void apply_act_quant<T>(const QuantHook&, Mode, const std::string&,             \
                                   std::vector<T>&, std::vector<std::uint8_t>&);

PIMNAS_INSTANTIATE(float)
PIMNAS_INSTANTIATE(double)
#undef PIMNAS_INSTANTIATE

}  // namespace pimnas::nn
