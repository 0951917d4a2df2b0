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


#include "pimnas/pipeline/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

namespace pimnas::pipeline {

namespace {

constexpr std::size_t kRecord = 3073;
constexpr int kCifarSide = 32;

struct Blob {
  double cy, cx, sigma;
  std::vector<double> colour;
};

void render(const std::vector<Blob>& blobs, const SyntheticParams& p, Rng& rng, float* out) {
  std::uniform_int_distribution<int> shift(-p.jitter, p.jitter);
  std::uniform_real_distribution<double> gain(1.0 - p.gain_spread, 1.0 + p.gain_spread);
  std::normal_distribution<double> noise(0.0, p.noise);
  const int s = p.image_size;
  std::vector<double> img(static_cast<std::size_t>(p.channels) * s * s, 0.0);
  const int dy = shift(rng), dx = shift(rng);
  for (const Blob& b : blobs) {
    const double g = gain(rng);
    for (int y = 0; y < s; ++y) {
      for (int x = 0; x < s; ++x) {
        const double ry = y - (b.cy + dy), rx = x - (b.cx + dx);
        const double v = g * std::exp(-(ry * ry + rx * rx) / (2.0 * b.sigma * b.sigma));
        for (int c = 0; c < p.channels; ++c) img[(static_cast<std::size_t>(c) * s + y) * s + x] += v * b.colour[c];
      }
    }
  }
  std::uniform_real_distribution<double> pos(0.0, s - 1.0), width(0.08 * s, 0.2 * s), colour(-1.0, 1.0);
  for (int k = 0; k < p.clutter; ++k) {
    const double cy = pos(rng), cx = pos(rng), sigma = width(rng);
    std::vector<double> col(p.channels);
    for (double& c : col) c = colour(rng);
    for (int y = 0; y < s; ++y) {
      for (int x = 0; x < s; ++x) {
        const double v = std::exp(-((y - cy) * (y - cy) + (x - cx) * (x - cx)) / (2.0 * sigma * sigma));
        for (int c = 0; c < p.channels; ++c) img[(static_cast<std::size_t>(c) * s + y) * s + x] += v * col[c];
      }
    }
  }
  for (std::size_t i = 0; i < img.size(); ++i) out[i] = static_cast<float>(img[i] + noise(rng));
}

nn::ImageSet take(const nn::ImageSet& src, const std::vector<std::size_t>& order, std::size_t begin,
                  std::size_t end) {
  std::vector<std::size_t> idx(order.begin() + static_cast<long>(begin), order.begin() + static_cast<long>(end));
  return src.subset(idx);
}

}  // namespace

void to_json(nlohmann::json& j, const SyntheticParams& p) {
  j = nlohmann::json{{"num_classes", p.num_classes}, {"image_size", p.image_size}, {"channels", p.channels},
                     {"train", p.train},             {"val", p.val},               {"test", p.test},
                     {"blobs", p.blobs},             {"noise", p.noise},           {"jitter", p.jitter},
                     {"gain_spread", p.gain_spread}, {"clutter", p.clutter}};
}

void from_json(const nlohmann::json& j, SyntheticParams& p) {
  SyntheticParams d;
  d.num_classes = j.value("num_classes", d.num_classes);
  d.image_size = j.value("image_size", d.image_size);
  d.channels = j.value("channels", d.channels);
  d.train = j.value("train", d.train);
  d.val = j.value("val", d.val);
  d.test = j.value("test", d.test);
  d.blobs = j.value("blobs", d.blobs);
  d.noise = j.value("noise", d.noise);
  d.jitter = j.value("jitter", d.jitter);
  d.gain_spread = j.value("gain_spread", d.gain_spread);
  d.clutter = j.value("clutter", d.clutter);
  p = d;
}

Dataset make_synthetic(const SyntheticParams& p, std::uint64_t seed) {
  if (p.num_classes < 2) throw DataError("synthetic data needs at least 2 classes");
  if (p.image_size < 1 || p.channels < 1 || p.blobs < 1) throw DataError("synthetic data: bad geometry");
  if (p.train < 1 || p.val < 0 || p.test < 0) throw DataError("synthetic data: bad split sizes");
  if (p.noise < 0.0 || p.jitter < 0 || p.gain_spread < 0.0 || p.gain_spread >= 1.0 || p.clutter < 0) {
    throw DataError("synthetic data: bad noise parameters");
  }
  Rng proto_rng(derive_seed(seed, "synthetic-prototypes"));
  std::uniform_real_distribution<double> pos(0.0, p.image_size - 1.0);
  std::uniform_real_distribution<double> width(0.08 * p.image_size, 0.2 * p.image_size);
  std::uniform_real_distribution<double> colour(-1.0, 1.0);
  std::vector<std::vector<Blob>> classes(p.num_classes);
  for (auto& blobs : classes) {
    for (int b = 0; b < p.blobs; ++b) {
      Blob blob{pos(proto_rng), pos(proto_rng), width(proto_rng), {}};
      for (int c = 0; c < p.channels; ++c) blob.colour.push_back(colour(proto_rng));
      blobs.push_back(std::move(blob));
    }
  }

  auto split = [&](int count, std::string_view tag) {
    nn::ImageSet set;
    set.channels = p.channels;
    set.height = set.width = p.image_size;
    set.pixels.resize(static_cast<std::size_t>(count) * set.image_size());
    set.labels.resize(count);
    Rng rng(derive_seed(seed, tag));
    for (int i = 0; i < count; ++i) {
      const int label = i % p.num_classes;  // balanced
      set.labels[i] = label;
      render(classes[label], p, rng, set.pixels.data() + static_cast<std::size_t>(i) * set.image_size());
    }
    return set;
  };

  Dataset d;
  d.name = "synthetic";
  d.num_classes = p.num_classes;
  // validation is carved from the training pool
  nn::ImageSet pool = split(p.train + p.val, "synthetic-train");
  std::vector<std::size_t> order(pool.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng carve(derive_seed(seed, "synthetic-val-carve"));
  std::shuffle(order.begin(), order.end(), carve);
  d.val = take(pool, order, 0, static_cast<std::size_t>(p.val));
  d.train = take(pool, order, static_cast<std::size_t>(p.val), order.size());
  d.test = split(p.test, "synthetic-test");
  normalize(d);
  return d;
}

nn::ImageSet read_cifar10_binary(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  if (bytes.size() % kRecord != 0) {
    const std::size_t whole = bytes.size() / kRecord;
    throw DataError(path.string() + ": corrupt CIFAR-10 file, size " + std::to_string(bytes.size()) +
                    " is not a multiple of " + std::to_string(kRecord) + "; trailing partial record at offset " +
                    std::to_string(whole * kRecord) + " (expected " + std::to_string((whole + 1) * kRecord) +
                    " bytes for the next record)");
  }
  nn::ImageSet set;
  set.channels = 3;
  set.height = set.width = kCifarSide;
  const std::size_t n = bytes.size() / kRecord;
  set.labels.resize(n);
  set.pixels.resize(n * set.image_size());
  for (std::size_t i = 0; i < n; ++i) {
    const unsigned char* rec = bytes.data() + i * kRecord;
    if (rec[0] > 9) {
      throw DataError(path.string() + ": label " + std::to_string(rec[0]) + " out of range at offset " +
                      std::to_string(i * kRecord));
    }
    set.labels[i] = rec[0];
    for (std::size_t k = 0; k < set.image_size(); ++k) set.pixels[i * set.image_size() + k] = rec[1 + k] / 255.0f;
  }
  return set;
}

void write_cifar10_binary(const std::filesystem::path& path, const nn::ImageSet& images) {
  if (images.channels != 3 || images.height != kCifarSide || images.width != kCifarSide) {
    throw DataError("CIFAR-10 records hold 3x32x32 images");
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot write " + path.string());
  std::vector<unsigned char> rec(kRecord);
  for (std::size_t i = 0; i < images.size(); ++i) {
    rec[0] = static_cast<unsigned char>(images.labels[i]);
    const float* img = images.image(i);
    for (std::size_t k = 0; k < images.image_size(); ++k) {
      rec[1 + k] = static_cast<unsigned char>(std::lround(std::clamp(img[k], 0.0f, 1.0f) * 255.0f));
    }
    os.write(reinterpret_cast<const char*>(rec.data()), static_cast<std::streamsize>(rec.size()));
  }
}

Dataset load_cifar10(const std::filesystem::path& dir, int val_size, std::uint64_t seed) {
  Dataset d;
  d.name = "cifar10";
  d.num_classes = 10;
  nn::ImageSet pool;
  for (int b = 1; b <= 5; ++b) pool.append(read_cifar10_binary(dir / ("data_batch_" + std::to_string(b) + ".bin")));
  d.test = read_cifar10_binary(dir / "test_batch.bin");
  if (val_size < 0 || static_cast<std::size_t>(val_size) >= pool.size()) {
    throw DataError("validation size " + std::to_string(val_size) + " does not fit the training pool");
  }
  std::vector<std::size_t> order(pool.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng carve(derive_seed(seed, "cifar10-val-carve"));
  std::shuffle(order.begin(), order.end(), carve);
  d.val = take(pool, order, 0, static_cast<std::size_t>(val_size));
  d.train = take(pool, order, static_cast<std::size_t>(val_size), order.size());
  normalize(d);
  return d;
}

void normalize(Dataset& d) {
  const nn::ImageSet& t = d.train;
  const std::size_t plane = static_cast<std::size_t>(t.height) * t.width;
  d.mean.assign(t.channels, 0.0);
  d.stddev.assign(t.channels, 0.0);
  for (int c = 0; c < t.channels; ++c) {
    double s = 0.0, s2 = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
      const float* p = t.image(i) + c * plane;
      for (std::size_t k = 0; k < plane; ++k) {
        s += p[k];
        s2 += static_cast<double>(p[k]) * p[k];
      }
    }
    const double n = static_cast<double>(t.size() * plane);
    d.mean[c] = s / n;
    d.stddev[c] = std::sqrt(std::max(1e-12, s2 / n - d.mean[c] * d.mean[c]));
  }
  for (nn::ImageSet* set : {&d.train, &d.val, &d.test}) {
    for (std::size_t i = 0; i < set->size(); ++i) {
      float* img = set->pixels.data() + i * set->image_size();
      for (int c = 0; c < set->channels; ++c) {
        for (std::size_t k = 0; k < plane; ++k) {
          img[c * plane + k] = static_cast<float>((img[c * plane + k] - d.mean[c]) / d.stddev[c]);
        }
      }
    }
  }
}

}  // namespace pimnas::pipeline
