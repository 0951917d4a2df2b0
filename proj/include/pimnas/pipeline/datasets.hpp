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

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pimnas/nn/data.hpp"

namespace pimnas::pipeline {

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Dataset {
  std::string name;
  nn::ImageSet train, val, test;
  int num_classes = 0;
  std::vector<double> mean, stddev;  // per-channel normalization applied to every split
};

/// Class-conditional Gaussian-blob images. Each class owns `blobs` blobs
/// with fixed centres, widths and colours; a sample renders them with a
/// random shift of up to `jitter` pixels, a random gain, and additive
/// Gaussian pixel noise of standard deviation `noise`.
struct SyntheticParams {
  int num_classes = 10;
  int image_size = 16;
  int channels = 3;
  int train = 2000;
  int val = 500;
  int test = 500;
  int blobs = 3;
  double noise = 0.5;
  int jitter = 2;
  double gain_spread = 0.3;
  int clutter = 1;  // random distractor blobs added to every image
};

void to_json(nlohmann::json& j, const SyntheticParams& p);
void from_json(const nlohmann::json& j, SyntheticParams& p);

Dataset make_synthetic(const SyntheticParams& p, std::uint64_t seed);

/// Reads one CIFAR-10 binary file: 3073-byte records of one label byte and
/// three 1024-byte channel planes (R, G, B). Pixels are scaled to [0, 1].
nn::ImageSet read_cifar10_binary(const std::filesystem::path& path);
void write_cifar10_binary(const std::filesystem::path& path, const nn::ImageSet& images);

/// Loads data_batch_1..5.bin and test_batch.bin from `dir`, carves a fixed
/// validation split of `val_size` training images (seeded shuffle), and
/// normalizes every split with the training split's channel statistics.
Dataset load_cifar10(const std::filesystem::path& dir, int val_size, std::uint64_t seed);

/// Per-channel mean/std of `set`, then applies (x - mean) / std to each split.
void normalize(Dataset& d);

}  // namespace pimnas::pipeline
