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

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "pimnas/nn/tensor.hpp"
#include "pimnas/rng.hpp"

namespace pimnas::nn {

/// Labelled images stored as contiguous NCHW floats.
struct ImageSet {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<float> pixels;
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
  std::size_t image_size() const { return static_cast<std::size_t>(channels) * height * width; }
  const float* image(std::size_t i) const { return pixels.data() + i * image_size(); }

  Tensor<float> gather(std::span<const std::size_t> idx) const;
  std::vector<int> gather_labels(std::span<const std::size_t> idx) const;
  /// First `n` images (or all when n exceeds the size).
  ImageSet head(std::size_t n) const;
  ImageSet subset(std::span<const std::size_t> idx) const;
  void append(const ImageSet& other);
};

struct Batch {
  Tensor<float> x;
  std::vector<int> y;
};

/// Fixed-size mini-batches over a shuffled (or sequential) order. The last
/// partial batch is kept.
class BatchPlan {
 public:
  BatchPlan(std::size_t count, std::size_t batch_size, Rng* shuffle);
  std::size_t batches() const { return (order_.size() + batch_ - 1) / batch_; }
  std::span<const std::size_t> indices(std::size_t b) const;
  Batch make(const ImageSet& set, std::size_t b) const;

 private:
  std::vector<std::size_t> order_;
  std::size_t batch_;
};

}  // namespace pimnas::nn
