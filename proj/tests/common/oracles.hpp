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

#include <algorithm>
#include <chrono>
#include <map>
#include <cmath>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

#include "pimnas/nn/layers.hpp"
#include "pimnas/space/search_space.hpp"

namespace pimnas::testing {

inline double chi_square_p(const std::vector<long>& observed, const std::vector<double>& expected_prob) {
  long total = 0;
  for (long o : observed) total += o;
  double stat = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    const double e = expected_prob[i] * static_cast<double>(total);
    stat += (observed[i] - e) * (observed[i] - e) / e;
  }
  boost::math::chi_squared dist(static_cast<double>(observed.size() - 1));
  return boost::math::cdf(boost::math::complement(dist, stat));
}

inline double chi_square_uniform_p(const std::vector<long>& observed) {
  return chi_square_p(observed, std::vector<double>(observed.size(), 1.0 / observed.size()));
}

// average ranks for ties
inline std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    i = j + 1;
  }
  return r;
}

inline double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return saa > 0 && sbb > 0 ? sab / std::sqrt(saa * sbb) : 0.0;
}

inline double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  return pearson(ranks(a), ranks(b));
}

// Expected prefix extent of every supernet parameter a path uses, derived
// from the block wiring rather than from the library's own extent table.
inline std::map<std::string, std::vector<int>> expected_path_extents(const space::SearchSpace& s,
                                                                      const space::ArchGenome& g) {
  std::map<std::string, std::vector<int>> out;
  int in = s.image_channels;
  for (int slot = 0; slot < g.depth(); ++slot) {
    const auto& b = g.blocks[slot];
    const int c = b.out_channels;
    const std::string p = "b" + std::to_string(slot) + "." +
                          (b.type == space::BlockType::kVgg ? "vgg" : b.type == space::BlockType::kMvgg ? "mvgg" : "res");
    out[p + ".conv1.w"] = {c, in, 3, 3};
    out[p + ".conv2.w"] = {c, c, 3, 3};
    std::vector<std::string> bns{".bn1", ".bn2"};
    if (b.type == space::BlockType::kRes) {
      out[p + ".shortcut.w"] = {c, in, 1, 1};
      bns.push_back(".bnsc");
    }
    for (const auto& bn : bns) {
      for (const char* f : {".gamma", ".beta", ".mean", ".var"}) out[p + bn + f] = {c};
    }
    in = c;
  }
  out["head.fc.w"] = {s.num_classes, in * s.head_pool * s.head_pool};
  out["head.fc.b"] = {s.num_classes};
  return out;
}

inline bool index_within(std::size_t flat, const std::vector<int>& shape, const std::vector<int>& extent) {
  for (int d = static_cast<int>(shape.size()) - 1; d >= 0; --d) {
    const std::size_t coord = flat % static_cast<std::size_t>(shape[d]);
    flat /= static_cast<std::size_t>(shape[d]);
    if (coord >= static_cast<std::size_t>(extent[d])) return false;
  }
  return true;
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
  }

 private:
  std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

}  // namespace pimnas::testing
