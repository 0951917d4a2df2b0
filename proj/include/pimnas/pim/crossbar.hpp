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
#include <vector>

#include "pimnas/nn/data.hpp"
#include "pimnas/quant/qat.hpp"
#include "pimnas/space/search_space.hpp"

namespace pimnas::pim {

/// ADC resolution sentinel meaning "no conversion error".
inline constexpr int kIdealAdc = 0;

/// Uniform ADC transfer over [0, full_scale]: the reconstructed partial sum.
std::int64_t adc_convert(std::int64_t partial_sum, std::int64_t full_scale, int adc_bits);

/// Behavioral crossbar MVM. Weight codes are offset to unsigned values
/// (w + theta_w) and stored as wb one-bit planes, one plane per column.
/// Activation codes are offset the same way and streamed as ceil(ab / dac)
/// digits of dac bits. Each row group of at most xbar rows yields one partial
/// sum per (column, digit); every partial sum passes the ADC, then digits,
/// planes and row groups are recombined by exact shifts and adds, and the
/// offsets are removed digitally.
class CrossbarBackend : public quant::MvmBackend {
 public:
  /// With `lossless_shortcut`, a layer whose every partial sum fits the ADC
  /// range exactly is computed as a plain integer product (same result).
  explicit CrossbarBackend(space::PimGenome pim, bool lossless_shortcut = true);
  void mvm(const quant::MvmShape& shape, const std::int32_t* w, const std::int32_t* x,
           std::int64_t* acc) override;

  /// True when the ADC cannot clip or round any partial sum of a layer with
  /// `rows` rows.
  bool lossless(int rows) const;

 private:
  space::PimGenome pim_;
  bool shortcut_;
  quant::IdealBackend exact_;
};

/// Crossbar dot product of one weight column and one input vector, written
/// for clarity (no bit packing); used to audit the packed backend.
std::int64_t crossbar_dot(std::span<const std::int32_t> w, std::span<const std::int32_t> x, int wb, int ab,
                          const space::PimGenome& pim);

/// PIM-affected predictions: quantized inference whose products run on the
/// crossbar backend.
std::vector<int> pim_inference(const space::SearchSpace& s, const space::ArchGenome& arch,
                               const nn::ParamStore<float>& store, const space::QuantGenome& quant,
                               const quant::QuantState& state, const space::PimGenome& pim,
                               const nn::ImageSet& data, int batch_size = 100, bool lossless_shortcut = true);

}  // namespace pimnas::pim
