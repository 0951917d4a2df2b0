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
#include <span>
#include <stdexcept>

namespace pimnas::quant {

class QuantError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Largest integer code of a symmetric q-bit quantizer: 2^(q-1) - 1.
constexpr int theta_for_bits(int bits) { return (1 << (bits - 1)) - 1; }

/// Integer code of `x`: clip(round(theta * x / alpha), -theta, theta).
/// Ties round away from zero so the quantizer stays odd-symmetric.
std::int32_t quantize_code(double x, double alpha, int bits);

/// Fake-quantized value of `x` (code scaled back by alpha / theta).
double quantize(double x, double alpha, int bits);

/// Fake-quantizes a whole tensor in place-free fashion. When `pass_mask` is
/// non-empty it receives 1 where the straight-through estimator passes the
/// gradient (|x| <= alpha) and 0 where the input was clipped.
template <typename T>
void quantize_tensor(std::span<const T> in, std::span<T> out, double alpha, int bits,
                     std::span<std::uint8_t> pass_mask = {});

/// One EMA step of the activation scale:
/// alpha <- m * alpha + (1 - m) * (|mean| + 3 |stddev|).
double update_activation_alpha(double alpha, double momentum, double mean, double stddev);

/// Mean and population standard deviation over a whole activation batch.
struct BatchMoments {
  double mean = 0.0;
  double stddev = 0.0;
};
template <typename T>
BatchMoments batch_moments(std::span<const T> x);

/// EMA-tracked activation scale of one (layer, bit-width) pair.
struct EmaScale {
  double alpha = 0.0;
  double momentum = 0.99;
  bool initialized = false;

  /// Folds one batch into the scale. The first observation initializes the
  /// scale directly from the batch statistic.
  void observe(const BatchMoments& m);
};

}  // namespace pimnas::quant
