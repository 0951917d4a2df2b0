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

#include <cmath>
#include <set>

#include "common/fixtures.hpp"
#include "pimnas/quant/qat.hpp"

using namespace pimnas;
using namespace pimnas::quant;

TEST_CASE("theta and simple quantizer values") {
  CHECK(theta_for_bits(5) == 15);
  CHECK(theta_for_bits(9) == 255);
  CHECK(theta_for_bits(3) == 3);
  CHECK(quantize(0.5, 1.0, 3) == doctest::Approx(2.0 / 3.0));
  CHECK(quantize(-0.5, 1.0, 3) == doctest::Approx(-2.0 / 3.0));
  CHECK(quantize_code(0.5, 1.0, 3) == 2);
  // saturation at +-alpha
  CHECK(quantize(7.0, 1.0, 5) == doctest::Approx(1.0));
  CHECK(quantize(-7.0, 1.0, 5) == doctest::Approx(-1.0));
  // every level is a fixed point
  for (int k = -15; k <= 15; ++k) CHECK(quantize(k * 0.4 / 15, 0.4, 5) == doctest::Approx(k * 0.4 / 15));
}

TEST_CASE("non-positive scale is rejected") {
  CHECK_THROWS_AS(quantize(0.1, 0.0, 5), QuantError);
  CHECK_THROWS_AS(quantize(0.1, -1.0, 5), QuantError);
  std::vector<float> in{1.0f}, out(1);
  CHECK_THROWS_AS(quantize_tensor<float>(in, out, 0.0, 5), QuantError);
}

TEST_CASE("tensor quantizer agrees with the scalar one and marks clipped inputs") {
  Rng rng(2);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::vector<double> in(500), out(500);
  for (double& v : in) v = u(rng);
  std::vector<std::uint8_t> pass(500);
  quantize_tensor<double>(in, out, 1.3, 7, pass);
  for (std::size_t i = 0; i < in.size(); ++i) {
    CHECK(out[i] == quantize(in[i], 1.3, 7));
    CHECK(pass[i] == (std::abs(in[i]) <= 1.3 ? 1 : 0));
  }
}

TEST_CASE("activation scale moving average") {
  CHECK(update_activation_alpha(1.0, 0.9, 0.0, 0.5) == doctest::Approx(1.05));
  CHECK(update_activation_alpha(2.5, 1.0, 10.0, 3.0) == 2.5);
  double a = 1.0;
  for (int i = 0; i < 5000; ++i) a = update_activation_alpha(a, 0.99, 0.7, 0.0);
  CHECK(a == doctest::Approx(0.7).epsilon(1e-9));

  EmaScale e;
  e.momentum = 0.9;
  e.observe({0.0, 0.5});
  CHECK(e.initialized);
  CHECK(e.alpha == doctest::Approx(1.5));
  e.observe({0.0, 0.0});
  CHECK(e.alpha == doctest::Approx(1.35));
}

TEST_CASE("quant state serialization round trip") {
  QuantState st(0.95);
  st.scale("b0.vgg.conv1", 5).observe({0.2, 0.1});
  st.scale("b0.vgg.conv1", 9).observe({0.1, 0.3});
  const QuantState back = QuantState::from_json(st.to_json());
  CHECK(back.size() == 2);
  CHECK(back.momentum() == 0.95);
  CHECK(back.find("b0.vgg.conv1", 5)->alpha == st.find("b0.vgg.conv1", 5)->alpha);
  CHECK(back.find("b0.vgg.conv1", 7) == nullptr);
}

namespace {

struct Trained {
  space::SearchSpace s = testing::tiny_space();
  space::ArchGenome arch = space::decode("n=2; blocks=MVGG/16/1,VGG/8/1").arch;
  pipeline::Dataset data = testing::tiny_data(11);
  nn::ParamStore<float> store = testing::train_fp(s, arch, data.train, 6, 12);
};

Trained& trained() {
  static Trained t;
  return t;
}

space::QuantGenome uniform(std::size_t n, int wb, int ab) {
  space::QuantGenome q;
  q.layers.assign(n, {wb, ab});
  return q;
}

}  // namespace

TEST_CASE("5-bit weights take at most 31 distinct values per tensor") {
  Trained& t = trained();
  QuantState state;
  const auto q = uniform(4, 5, 5);
  supernet::recalibrate_bn(t.store, t.s, t.arch, t.data.train, 64, 2, &q, &state);
  QuantizedNetwork qn(t.s, t.arch, t.store, q, state);
  for (const auto& L : qn.layers()) {
    const std::set<std::int32_t> distinct(L.weights.begin(), L.weights.end());
    const int theta = theta_for_bits(L.weight_bits);
    CHECK(static_cast<int>(distinct.size()) <= 2 * theta + 1);
    CHECK(*distinct.rbegin() <= theta);
    CHECK(*distinct.begin() >= -theta);
    // weight scale is the largest magnitude, so the extreme code is used
    CHECK((*distinct.rbegin() == theta || *distinct.begin() == -theta));
  }
}

TEST_CASE("mixed bit-width map: each layer respects its own code range") {
  Trained& t = trained();
  QuantState state;
  space::QuantGenome q;
  q.layers = {{5, 9}, {7, 5}, {9, 7}, {5, 5}};
  supernet::recalibrate_bn(t.store, t.s, t.arch, t.data.train, 64, 2, &q, &state);
  QuantizedNetwork qn(t.s, t.arch, t.store, q, state);
  REQUIRE(qn.layers().size() == 5);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(qn.layers()[i].weight_bits == q.layers[i].weight_bits);
    CHECK(qn.layers()[i].act_bits == q.layers[i].act_bits);
    const std::set<std::int32_t> distinct(qn.layers()[i].weights.begin(), qn.layers()[i].weights.end());
    CHECK(static_cast<int>(distinct.size()) <= 2 * theta_for_bits(q.layers[i].weight_bits) + 1);
  }
  CHECK(qn.layers().back().weight_bits == t.s.head_bits);
}

TEST_CASE("bit-width map of the wrong length is rejected") {
  Trained& t = trained();
  QuantState state;
  const auto q = uniform(3, 9, 9);
  CHECK_THROWS(QuantizedNetwork(t.s, t.arch, t.store, q, state));
  nn::ParamStore<float> copy = t.store;
  CHECK_THROWS(supernet::recalibrate_bn(copy, t.s, t.arch, t.data.train, 64, 1, &q, &state));
}

TEST_CASE("9-bit quantization stays within two points of full precision") {
  Trained& t = trained();
  nn::ParamStore<float> store = t.store;
  supernet::recalibrate_bn(store, t.s, t.arch, t.data.train, 64, 4);
  const double fp = supernet::evaluate_accuracy(store, t.s, t.arch, t.data.test);
  QuantState state;
  const auto q = uniform(4, 9, 9);
  supernet::recalibrate_bn(store, t.s, t.arch, t.data.train, 64, 4, &q, &state);
  IdealBackend ideal;
  QuantizedNetwork qn(t.s, t.arch, store, q, state);
  const double q9 = supernet::accuracy(qn.predict(t.data.test, ideal), t.data.test.labels);
  const double fq = supernet::accuracy(fake_quant_predict(store, t.s, t.arch, q, state, t.data.test),
                                       t.data.test.labels);
  INFO("fp " << fp << " int " << q9 << " fake " << fq);
  CHECK(fp > 0.5);
  CHECK(std::abs(q9 - fp) <= 0.02);
  CHECK(std::abs(fq - fp) <= 0.02);
}

TEST_CASE("quantization-aware training lowers the loss") {
  space::SearchSpace s = testing::tiny_space();
  s.weight_bits = {9};
  s.act_bits = {9};
  const space::ArchGenome arch = space::decode("n=1; blocks=MVGG/8/1").arch;
  const pipeline::Dataset d = testing::tiny_data(21);
  Rng rng(22);
  nn::ParamStore<float> store = supernet::init_supernet_params(s, rng);
  QuantState state;
  nn::Optimizer<float> opt(nn::OptimizerConfig{});
  double first = 0.0, last = 0.0;
  for (int step = 0; step < 100; ++step) {
    nn::BatchPlan plan(d.train.size(), 32, &rng);
    const auto r = quant_supernet_train_step(store, s, arch, state, plan.make(d.train, 0), rng, opt);
    CHECK(r.bits.layers == std::vector<space::LayerBits>(2, {9, 9}));
    if (step < 10) first += r.loss / 10;
    if (step >= 90) last += r.loss / 10;
  }
  CHECK(last < first);
  CHECK(state.find("b0.mvgg.conv1", 9) != nullptr);
}
