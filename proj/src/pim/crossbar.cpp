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


#include "pimnas/pim/crossbar.hpp"

#include <algorithm>
#include <bit>

#include "pimnas/pim/hardware.hpp"
#include "pimnas/quant/quantizer.hpp"

namespace pimnas::pim {

std::int64_t adc_convert(std::int64_t partial_sum, std::int64_t full_scale, int adc_bits) {
  if (adc_bits == kIdealAdc || full_scale <= 0) return partial_sum;
  const std::int64_t top = (std::int64_t{1} << adc_bits) - 1;
  const std::int64_t step = std::max<std::int64_t>(1, (full_scale + top - 1) / top);
  const std::int64_t code = std::min(top, (2 * partial_sum + step) / (2 * step));
  return code * step;
}

CrossbarBackend::CrossbarBackend(space::PimGenome pim, bool lossless_shortcut)
    : pim_(pim), shortcut_(lossless_shortcut) {
  if (pim_.xbar < 1 || pim_.dac_bits < 1 || pim_.adc_bits < 0 || pim_.adc_bits > 30) {
    throw HardwareError("crossbar backend: invalid configuration " + space::encode(pim_));
  }
}

bool CrossbarBackend::lossless(int rows) const {
  if (pim_.adc_bits == kIdealAdc) return true;
  const std::int64_t full_scale = std::int64_t{std::min(rows, pim_.xbar)} * ((std::int64_t{1} << pim_.dac_bits) - 1);
  return full_scale <= (std::int64_t{1} << pim_.adc_bits) - 1;
}

void CrossbarBackend::mvm(const quant::MvmShape& shape, const std::int32_t* w, const std::int32_t* x,
                          std::int64_t* acc) {
  if (shortcut_ && lossless(shape.rows)) {
    exact_.mvm(shape, w, x, acc);
    return;
  }
  const int wb = shape.weight_bits, ab = shape.act_bits, dac = pim_.dac_bits;
  const std::int64_t theta_w = quant::theta_for_bits(wb), theta_a = quant::theta_for_bits(ab);
  const int rows = shape.rows, out = shape.out, pixels = shape.pixels;
  const int X = pim_.xbar;
  const int groups = (rows + X - 1) / X;
  const int digits = (ab + dac - 1) / dac;
  const std::int64_t digit_max = (std::int64_t{1} << dac) - 1;

  // word layout per group: words_per_group[g] 64-bit words, offsets in group_off
  std::vector<int> group_rows(groups), group_off(groups + 1, 0);
  for (int g = 0; g < groups; ++g) {
    group_rows[g] = std::min(X, rows - g * X);
    group_off[g + 1] = group_off[g] + (group_rows[g] + 63) / 64;
  }
  const int words = group_off[groups];

  // weight planes: [o][b][word]
  std::vector<std::uint64_t> wbits(static_cast<std::size_t>(out) * wb * words, 0);
  std::vector<std::int64_t> wsum(out, 0);
  for (int o = 0; o < out; ++o) {
    for (int r = 0; r < rows; ++r) {
      const std::int64_t u = w[static_cast<std::size_t>(o) * rows + r] + theta_w;
      wsum[o] += u;
      const int g = r / X, local = r % X;
      const int word = group_off[g] + local / 64;
      for (int b = 0; b < wb; ++b) {
        if ((u >> b) & 1) wbits[(static_cast<std::size_t>(o) * wb + b) * words + word] |= std::uint64_t{1} << (local % 64);
      }
    }
  }

  // input bits: [p][bit][word], bit = digit * dac + j
  const int in_bits = digits * dac;
  std::vector<std::uint64_t> xbits(static_cast<std::size_t>(pixels) * in_bits * words, 0);
  std::vector<std::int64_t> xsum(pixels, 0);
  for (int r = 0; r < rows; ++r) {
    const int g = r / X, local = r % X;
    const int word = group_off[g] + local / 64;
    const std::uint64_t mask = std::uint64_t{1} << (local % 64);
    for (int p = 0; p < pixels; ++p) {
      const std::int64_t u = x[static_cast<std::size_t>(r) * pixels + p] + theta_a;
      xsum[p] += u;
      for (int bit = 0; bit < ab; ++bit) {
        if ((u >> bit) & 1) xbits[(static_cast<std::size_t>(p) * in_bits + bit) * words + word] |= mask;
      }
    }
  }

  for (int o = 0; o < out; ++o) {
    for (int p = 0; p < pixels; ++p) {
      std::int64_t total = 0;
      for (int g = 0; g < groups; ++g) {
        const std::int64_t full_scale = group_rows[g] * digit_max;
        for (int b = 0; b < wb; ++b) {
          const std::uint64_t* wp = &wbits[(static_cast<std::size_t>(o) * wb + b) * words];
          for (int d = 0; d < digits; ++d) {
            std::int64_t ps = 0;
            for (int j = 0; j < dac; ++j) {
              const std::uint64_t* xp = &xbits[(static_cast<std::size_t>(p) * in_bits + d * dac + j) * words];
              std::int64_t cnt = 0;
              for (int k = group_off[g]; k < group_off[g + 1]; ++k) cnt += std::popcount(wp[k] & xp[k]);
              ps += cnt << j;
            }
            total += adc_convert(ps, full_scale, pim_.adc_bits) << (b + d * dac);
          }
        }
      }
      acc[static_cast<std::size_t>(o) * pixels + p] =
          total - theta_a * wsum[o] - theta_w * xsum[p] + static_cast<std::int64_t>(rows) * theta_w * theta_a;
    }
  }
}

std::int64_t crossbar_dot(std::span<const std::int32_t> w, std::span<const std::int32_t> x, int wb, int ab,
                          const space::PimGenome& pim) {
  if (w.size() != x.size()) throw HardwareError("crossbar_dot: length mismatch");
  const std::int64_t theta_w = quant::theta_for_bits(wb), theta_a = quant::theta_for_bits(ab);
  const int dac = pim.dac_bits;
  const int digits = (ab + dac - 1) / dac;
  const std::int64_t radix = std::int64_t{1} << dac;
  const std::size_t n = w.size();
  std::int64_t total = 0, wsum = 0, xsum = 0;
  for (std::size_t i = 0; i < n; ++i) {
    wsum += w[i] + theta_w;
    xsum += x[i] + theta_a;
  }
  for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(pim.xbar)) {
    const std::size_t end = std::min(n, start + static_cast<std::size_t>(pim.xbar));
    const std::int64_t full_scale = static_cast<std::int64_t>(end - start) * (radix - 1);
    for (int b = 0; b < wb; ++b) {
      for (int d = 0; d < digits; ++d) {
        std::int64_t ps = 0;
        for (std::size_t i = start; i < end; ++i) {
          const std::int64_t cell = ((w[i] + theta_w) >> b) & 1;
          std::int64_t digit = (x[i] + theta_a);
          for (int k = 0; k < d; ++k) digit /= radix;
          ps += cell * (digit % radix);
        }
        std::int64_t weight = 1;
        for (int k = 0; k < b; ++k) weight *= 2;
        for (int k = 0; k < d; ++k) weight *= radix;
        total += adc_convert(ps, full_scale, pim.adc_bits) * weight;
      }
    }
  }
  return total - theta_a * wsum - theta_w * xsum + static_cast<std::int64_t>(n) * theta_w * theta_a;
}

std::vector<int> pim_inference(const space::SearchSpace& s, const space::ArchGenome& arch,
                               const nn::ParamStore<float>& store, const space::QuantGenome& quant,
                               const quant::QuantState& state, const space::PimGenome& pim,
                               const nn::ImageSet& data, int batch_size, bool lossless_shortcut) {
  quant::QuantizedNetwork net(s, arch, store, quant, state);
  CrossbarBackend backend(pim, lossless_shortcut);
  return net.predict(data, backend, batch_size);
}

}  // namespace pimnas::pim
