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


#include <doctest.h>

#include <filesystem>

#include "common/fixtures.hpp"
#include "common/oracles.hpp"

using namespace pimnas;
using namespace pimnas::supernet;

namespace {

nn::Batch first_batch(const nn::ImageSet& d, std::size_t n) {
  nn::BatchPlan plan(d.size(), n, nullptr);
  return plan.make(d, 0);
}

}  // namespace

TEST_CASE("a training step touches exactly the sampled path") {
  const space::SearchSpace s = testing::tiny_space();
  const auto d = testing::tiny_data(1);
  Supernet net(s, 2);
  nn::Optimizer<float> opt(nn::OptimizerConfig{});
  const std::string slot1_vgg = block_param_names(1, space::BlockType::kVgg).conv1 + ".w";

  const auto before = net.params().get(slot1_vgg).value;
  net.train_step(first_batch(d.train, 16), space::decode("n=2; blocks=RES/8/1,VGG/16/1").arch, opt);
  CHECK(net.params().get(slot1_vgg).value != before);

  const auto after_use = net.params().get(slot1_vgg).value;
  net.train_step(first_batch(d.train, 16), space::decode("n=2; blocks=RES/8/1,MVGG/16/1").arch, opt);
  CHECK(net.params().get(slot1_vgg).value == after_use);

  // a depth-1 path leaves every later slot alone
  nn::ParamStore<float> snapshot = net.params();
  net.train_step(first_batch(d.train, 16), space::decode("n=1; blocks=VGG/8/1").arch, opt);
  for (const auto& [name, p] : net.params().all()) {
    if (name.rfind("b1.", 0) == 0 || name.rfind("b2.", 0) == 0) CHECK(p.value == snapshot.get(name).value);
  }
}

TEST_CASE("supernet training halves the loss on a separable two-class set") {
  space::SearchSpace s = testing::tiny_space();
  s.num_classes = 2;
  pipeline::SyntheticParams p;
  p.num_classes = 2;
  p.image_size = 8;
  p.train = 400;
  p.noise = 0.1;
  p.clutter = 0;
  p.jitter = 0;
  const auto d = pipeline::make_synthetic(p, 3);
  Supernet net(s, 4);
  nn::OptimizerConfig oc;
  oc.learning_rate = 0.05;
  nn::Optimizer<float> opt(oc);
  Rng rng(5);
  double first = 0.0, last = 0.0;
  for (int step = 0; step < 200; ++step) {
    nn::BatchPlan plan(d.train.size(), 32, &rng);
    const double loss = net.train_step(plan.make(d.train, 0), rng, opt).loss;
    if (step == 0) first = loss;
    if (step >= 190) last += loss / 10;
  }
  INFO("first " << first << " last " << last);
  CHECK(last <= 0.5 * first);
}

TEST_CASE("extraction copies prefix slices") {
  const space::SearchSpace s = testing::tiny_space();
  Supernet net(s, 6);
  const space::ArchGenome a = space::decode("n=2; blocks=VGG/8/1,RES/16/1").arch;
  nn::ParamStore<float> sub = net.extract(a);
  const auto expected = testing::expected_path_extents(s, a);
  CHECK(sub.count() == expected.size());
  for (const auto& [name, extent] : expected) {
    REQUIRE(sub.contains(name));
    const auto& small = sub.get(name);
    const auto& big = net.params().get(name);
    CHECK(small.shape == extent);
    std::vector<float> oracle;
    for (std::size_t i = 0; i < big.size(); ++i) {
      if (testing::index_within(i, big.shape, extent)) oracle.push_back(big.value[i]);
    }
    CHECK(small.value == oracle);
  }
  // chained slice: the second block's input width equals the first block's output
  CHECK(sub.get(block_param_names(1, space::BlockType::kRes).conv1 + ".w").shape ==
        std::vector<int>{16, 8, 3, 3});

  // widest path: identity slice
  const space::ArchGenome full = space::decode("n=3; blocks=VGG/16/1,VGG/16/1,VGG/16/1").arch;
  nn::ParamStore<float> whole = net.extract(full);
  for (const auto& [name, p] : whole.all()) {
    if (name.rfind("b", 0) == 0) CHECK(p.value == net.params().get(name).value);
  }

  // deep copy
  sub.get(supernet::kHeadWeight).value[0] += 1.0f;
  CHECK(sub.get(supernet::kHeadWeight).value[0] != net.params().get(supernet::kHeadWeight).value[0]);
}

TEST_CASE("sliced subnet and supernet compute the same logits") {
  const space::SearchSpace s = testing::tiny_space();
  Supernet net(s, 7);
  const auto d = testing::tiny_data(8);
  Rng rng(9);
  const nn::Batch b = first_batch(d.test, 20);
  for (int i = 0; i < 5; ++i) {
    const space::ArchGenome a = space::sample_arch(s, rng);
    nn::ParamStore<float> sub = net.extract(a);
    nn::ParamStore<float> full = net.params();
    Network<float> n1(s, a, full), n2(s, a, sub);
    const auto y1 = n1.forward(b.x, Mode::kEval), y2 = n2.forward(b.x, Mode::kEval);
    for (std::size_t k = 0; k < y1.size(); ++k) CHECK(std::abs(y1.vec()[k] - y2.vec()[k]) <= 1e-6);
  }
}

TEST_CASE("batch-norm recalibration") {
  space::SearchSpace s = testing::tiny_space();
  Supernet net(s, 10);
  const space::ArchGenome a = space::decode("n=1; blocks=VGG/8/1").arch;
  nn::ParamStore<float> store = net.extract(a);

  SUBCASE("constant input gives the induced pre-norm mean") {
    nn::ImageSet constant;
    constant.channels = 3;
    constant.height = constant.width = 8;
    constant.labels.assign(16, 0);
    const float c = 0.75f;
    constant.pixels.assign(16 * 3 * 64, c);
    recalibrate_bn(store, s, a, constant, 8, 2);
    const BlockParamNames n = block_param_names(0, space::BlockType::kVgg);
    const auto& w = store.get(n.conv1 + ".w");
    const auto& mean = store.get(n.bn1 + ".mean");
    for (int o = 0; o < 8; ++o) {
      double total = 0.0;
      for (int y = 0; y < 8; ++y) {
        for (int x = 0; x < 8; ++x) {
          for (int ci = 0; ci < 3; ++ci) {
            for (int ky = 0; ky < 3; ++ky) {
              for (int kx = 0; kx < 3; ++kx) {
                const int iy = y + ky - 1, ix = x + kx - 1;
                if (iy < 0 || iy >= 8 || ix < 0 || ix >= 8) continue;
                total += w.value[((o * 3 + ci) * 3 + ky) * 3 + kx] * c;
              }
            }
          }
        }
      }
      CHECK(mean.value[o] == doctest::Approx(total / 64).epsilon(1e-6));
    }
  }

  SUBCASE("degenerate requests are rejected") {
    const auto d = testing::tiny_data(11);
    CHECK_THROWS(recalibrate_bn(store, s, a, d.train, 8, 0));
    CHECK_THROWS(recalibrate_bn(store, s, a, nn::ImageSet{}, 8, 1));
  }
}

TEST_CASE("recalibrated subnets are at least as accurate as raw supernet statistics") {
  const space::SearchSpace s = testing::tiny_space();
  const auto d = testing::tiny_data(12, 1024);
  Supernet net(s, 13);
  nn::OptimizerConfig oc;
  oc.learning_rate = 0.05;
  nn::Optimizer<float> opt(oc);
  Rng rng(14);
  for (int e = 0; e < 4; ++e) {
    nn::BatchPlan plan(d.train.size(), 32, &rng);
    for (std::size_t b = 0; b < plan.batches(); ++b) net.train_step(plan.make(d.train, b), rng, opt);
  }
  int wins = 0;
  for (int i = 0; i < 8; ++i) {
    const space::ArchGenome a = space::sample_arch(s, rng);
    nn::ParamStore<float> raw = net.extract(a);
    nn::ParamStore<float> cal = raw;
    recalibrate_bn(cal, s, a, d.train, 64, 8);
    const double r = evaluate_accuracy(raw, s, a, d.val), c = evaluate_accuracy(cal, s, a, d.val);
    INFO(space::encode(a) << " raw " << r << " recalibrated " << c);
    if (c >= r) ++wins;
  }
  CHECK(wins >= 6);
}

TEST_CASE("accuracy helper") {
  std::vector<int> labels, zeros(100, 0);
  for (int i = 0; i < 100; ++i) labels.push_back(i % 10);
  CHECK(accuracy(zeros, labels) == doctest::Approx(0.10));
  CHECK(accuracy(labels, labels) == 1.0);
  CHECK_THROWS(accuracy(std::vector<int>{1}, labels));
}

TEST_CASE("checkpoint refuses a different configuration") {
  const space::SearchSpace s = testing::tiny_space();
  Supernet net(s, 15);
  const auto path = std::filesystem::temp_directory_path() / "pimnas_supernet_test.ckpt";
  net.save(path);
  const Supernet back = Supernet::load(path, s);
  CHECK(back.params().get(kHeadWeight).value == net.params().get(kHeadWeight).value);
  space::SearchSpace other = s;
  other.channel_choices = {8, 32};
  CHECK_THROWS_WITH(Supernet::load(path, other), doctest::Contains("mismatch"));
  std::filesystem::remove(path);
}
