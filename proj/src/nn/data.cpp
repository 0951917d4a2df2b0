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


#include "pimnas/nn/data.hpp"

#include <algorithm>
#include <numeric>

namespace pimnas::nn {

Tensor<float> ImageSet::gather(std::span<const std::size_t> idx) const {
  Tensor<float> t({static_cast<int>(idx.size()), channels, height, width});
  const std::size_t per = image_size();
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] >= size()) throw EngineError("image index " + std::to_string(idx[i]) + " out of range");
    std::copy_n(image(idx[i]), per, t.data() + i * per);
  }
  return t;
}

std::vector<int> ImageSet::gather_labels(std::span<const std::size_t> idx) const {
  std::vector<int> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(labels.at(i));
  return out;
}

ImageSet ImageSet::head(std::size_t n) const {
  std::vector<std::size_t> idx(std::min(n, size()));
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return subset(idx);
}

ImageSet ImageSet::subset(std::span<const std::size_t> idx) const {
  ImageSet out;
  out.channels = channels;
  out.height = height;
  out.width = width;
  out.pixels = gather(idx).vec();
  out.labels = gather_labels(idx);
  return out;
}

void ImageSet::append(const ImageSet& other) {
  if (size() == 0 && channels == 0) {
    *this = other;
    return;
  }
  if (other.channels != channels || other.height != height || other.width != width) {
    throw EngineError("cannot append images of a different geometry");
  }
  pixels.insert(pixels.end(), other.pixels.begin(), other.pixels.end());
  labels.insert(labels.end(), other.labels.begin(), other.labels.end());
}

BatchPlan::BatchPlan(std::size_t count, std::size_t batch_size, Rng* shuffle)
    : order_(count), batch_(batch_size) {
  if (batch_size == 0) throw EngineError("batch size must be positive");
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  if (shuffle) std::shuffle(order_.begin(), order_.end(), *shuffle);
}

std::span<const std::size_t> BatchPlan::indices(std::size_t b) const {
  const std::size_t start = b * batch_;
  const std::size_t end = std::min(order_.size(), start + batch_);
  return std::span<const std::size_t>(order_).subspan(start, end - start);
}

Batch BatchPlan::make(const ImageSet& set, std::size_t b) const {
  auto idx = indices(b);
  return {set.gather(idx), set.gather_labels(idx)};
}

}  // namespace pimnas::nn
