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

#include "pimnas/quant/quantizer.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace pimnas::quant {

namespace {

void check_args(double alpha, int bits) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw QuantError("quantizer scale must be positive and finite, got " + std::to_string(alpha));
  }
  if (bits < 2 || bits > 30) {
    throw QuantError("quantizer bit width must be in [2, 30], got " + std::to_string(bits));
  }
}

}  // namespace

std::int32_t quantize_code(double x, double alpha, int bits) {
  check_args(alpha, bits);
  const int theta = theta_for_bits(bits);
  const double r = std::round(theta * x / alpha);  // half away from zero
  return static_cast<std::int32_t>(std::clamp(r, -static_cast<double>(theta),
                                               static_cast<double>(theta)));
}

double quantize(double x, double alpha, int bits) {
  const int theta = theta_for_bits(bits);
  return quantize_code(x, alpha, bits) * alpha / theta;
}

template <typename T>
void quantize_tensor(std::span<const T> in, std::span<T> out, double alpha, int bits,
                     std::span<std::uint8_t> pass_mask) {
  check_args(alpha, bits);
  const int theta = theta_for_bits(bits);
  for (std::size_t i = 0; i < in.size(); ++i) {
    const double x = static_cast<double>(in[i]);
    const double r = std::clamp(std::round(theta * x / alpha), -static_cast<double>(theta),
                                static_cast<double>(theta));
    out[i] = static_cast<T>(r * alpha / theta);
    if (!pass_mask.empty()) pass_mask[i] = std::abs(x) <= alpha ? 1 : 0;
  }
}

double update_activation_alpha(double alpha, double momentum, double mean, double stddev) {
  return momentum * alpha + (1.0 - momentum) * (std::abs(mean) + 3.0 * std::abs(stddev));
}

template <typename T>
BatchMoments batch_moments(std::span<const T> x) {
  BatchMoments m;
  if (x.empty()) return m;
  double sum = 0.0;
  for (T v : x) sum += static_cast<double>(v);
  m.mean = sum / static_cast<double>(x.size());
  double sq = 0.0;
  for (T v : x) {
    const double d = static_cast<double>(v) - m.mean;
    sq += d * d;
  }
  m.stddev = std::sqrt(sq / static_cast<double>(x.size()));
  return m;
}

void EmaScale::observe(const BatchMoments& m) {
  const double target = std::abs(m.mean) + 3.0 * std::abs(m.stddev);
  if (!initialized) {
    alpha = target;
    initialized = true;
  } else {
    alpha = update_activation_alpha(alpha, momentum, m.mean, m.stddev);
  }
}

template void quantize_tensor<float>(std::span<const float>, std::span<float>, double, int,
                                     std::span<std::uint8_t>);
template void quantize_tensor<double>(std::span<const double>, std::span<double>, double, int,
                                      std::span<std::uint8_t>);
template BatchMoments batch_moments<float>(std::span<const float>);
template BatchMoments batch_moments<double>(std::span<const double>);

}  // namespace pimnas::quant
