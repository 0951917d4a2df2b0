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

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "common/gradcheck.hpp"
#include "common/oracles.hpp"
#include "pimnas/nn/checkpoint.hpp"
#include "pimnas/nn/optimizer.hpp"

using namespace pimnas;
using namespace pimnas::nn;

TEST_CASE("convolution and pooling output shapes") {
  ParamStore<float> st;
  auto& w = st.add("c.w", {32, 3, 3, 3});
  Conv2d<float> conv("c", &w, 3, 32, 3, 1, 1);
  CHECK(conv.forward(Tensor<float>({1, 3, 32, 32}), Mode::kEval).shape() == Shape4{1, 32, 32, 32});
  MaxPool2<float> pool;
  CHECK(pool.forward(Tensor<float>({1, 32, 32, 32})).shape() == Shape4{1, 32, 16, 16});
  auto& w2 = st.add("s.w", {8, 32, 3, 3});
  Conv2d<float> strided("s", &w2, 32, 8, 3, 2, 1);
  // floor((32 + 2 - 3) / 2) + 1 = 16
  CHECK(strided.forward(Tensor<float>({1, 32, 32, 32}), Mode::kEval).shape() == Shape4{1, 8, 16, 16});
  CHECK(conv_out_extent(7, 3, 2, 1) == 4);
  CHECK(conv_out_extent(7, 1, 2, 0) == 4);
}

TEST_CASE("shape mismatch names the layer and both shapes") {
  ParamStore<float> st;
  auto& w = st.add("blockA.conv1.w", {4, 3, 3, 3});
  Conv2d<float> conv("blockA.conv1", &w, 3, 4, 3, 1, 1);
  try {
    conv.forward(Tensor<float>({1, 5, 8, 8}), Mode::kEval);
    FAIL("expected an error");
  } catch (const EngineError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("blockA.conv1") != std::string::npos);
    CHECK(msg.find("(1,5,8,8)") != std::string::npos);
  }
}

TEST_CASE("backward without forward is an error") {
  ParamStore<float> st;
  auto& w = st.add("c.w", {2, 2, 1, 1});
  Conv2d<float> conv("c", &w, 2, 2, 1, 1, 0);
  CHECK_THROWS_AS(conv.backward(Tensor<float>({1, 2, 2, 2})), EngineError);
  ReLU<float> relu;
  CHECK_THROWS_AS(relu.backward(Tensor<float>({1, 1, 1, 1})), EngineError);
}

TEST_CASE("single linear unit: dL/dw = x") {
  ParamStore<double> st;
  auto& w = st.add("fc.w", {1, 1});
  auto& b = st.add("fc.b", {1});
  w.value[0] = 0.7;
  Linear<double> fc("fc", &w, &b, 1, 1);
  fc.forward(Tensor<double>({1, 1, 1, 1}, 2.0), Mode::kTrain);
  fc.backward(Tensor<double>({1, 1, 1, 1}, 1.0));
  CHECK(w.grad[0] == doctest::Approx(2.0));
  CHECK(b.grad[0] == doctest::Approx(1.0));
}

TEST_CASE("unused slice of a layer receives zero gradient") {
  ParamStore<double> st;
  auto& w = st.add("c.w", {4, 4, 3, 3});
  auto& frozen = st.add("other.w", {4, 4, 3, 3});
  Rng rng(1);
  testing::randomize(w, rng);
  Conv2d<double> conv("c", &w, 2, 3, 3, 1, 1);
  conv.forward(testing::random_tensor({1, 2, 4, 4}, rng), Mode::kTrain);
  conv.backward(testing::random_tensor({1, 3, 4, 4}, rng));
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (!testing::index_within(i, w.shape, {3, 2, 3, 3})) CHECK(w.grad[i] == 0.0);
  }
  for (double g : frozen.grad) CHECK(g == 0.0);
  CHECK(!frozen.touched());
  CHECK(w.active == std::vector<int>{3, 2, 3, 3});
}

TEST_CASE("every layer kind passes the finite-difference check") {
  for (const auto& r : testing::layer_gradient_checks(3)) {
    INFO(r.what);
    CHECK(r.max_rel < 1e-4);
    CHECK(r.inactive_zero);
  }
  space::SearchSpace s = space::SearchSpace::desk();
  s.image_size = 8;
  s.channel_choices = {3, 5};
  s.num_classes = 4;
  s.head_pool = 2;
  s.res_stride2 = true;
  for (const char* g : {"n=1; blocks=VGG/5/1", "n=2; blocks=RES/3/2,MVGG/5/1", "n=3; blocks=MVGG/3/1,RES/5/1,VGG/3/1"}) {
    const auto r = testing::network_gradient_check(s, space::decode(g).arch, 9);
    INFO(r.what);
    CHECK(r.max_rel < 1e-4);
  }
}

TEST_CASE("SGD and Adam updates") {
  ParamStore<double> st;
  auto& p = st.add("p", {1});
  p.value[0] = 1.0;
  p.grad[0] = 0.5;
  p.touch({1});
  OptimizerConfig sgd;
  sgd.learning_rate = 0.1;
  sgd.momentum = 0.0;
  Optimizer<double>(sgd).step(st);
  CHECK(p.value[0] == doctest::Approx(0.95));

  // zero gradient leaves the value unchanged
  Optimizer<double> opt(sgd);
  p.grad[0] = 0.0;
  opt.step(st);
  CHECK(p.value[0] == doctest::Approx(0.95));

  // Adam, constant gradient, three steps against a hand-rolled scalar loop
  OptimizerConfig ac;
  ac.kind = OptimizerKind::kAdam;
  ac.learning_rate = 0.01;
  Optimizer<double> adam(ac);
  p.value[0] = 1.0;
  double x = 1.0, m = 0.0, v = 0.0;
  for (int t = 1; t <= 3; ++t) {
    p.grad[0] = 0.3;
    adam.step(st);
    m = 0.9 * m + 0.1 * 0.3;
    v = 0.999 * v + 0.001 * 0.09;
    const double mh = m / (1 - std::pow(0.9, t)), vh = v / (1 - std::pow(0.999, t));
    x -= 0.01 * mh / (std::sqrt(vh) + 1e-8);
    CHECK(p.value[0] == doctest::Approx(x).epsilon(1e-12));
  }
  CHECK(adam.step_count("p") == 3);
}

TEST_CASE("non-finite gradient is reported with the parameter name") {
  ParamStore<float> st;
  auto& p = st.add("head.fc.w", {2});
  p.grad[1] = std::nanf("");
  p.touch({2});
  Optimizer<float> opt(OptimizerConfig{});
  try {
    opt.step(st);
    FAIL("expected an error");
  } catch (const EngineError& e) {
    CHECK(std::string(e.what()).find("head.fc.w") != std::string::npos);
  }
  CHECK(p.value[0] == 0.0f);
}

TEST_CASE("training-mode batch norm normalizes each channel") {
  ParamStore<double> st;
  auto& g = st.add("bn.gamma", {3});
  auto& b = st.add("bn.beta", {3});
  auto& m = st.add("bn.mean", {3}, false);
  auto& v = st.add("bn.var", {3}, false);
  std::fill(g.value.begin(), g.value.end(), 1.0);
  std::fill(v.value.begin(), v.value.end(), 1.0);
  BatchNorm2d<double> bn("bn", &g, &b, &m, &v, 3);
  Rng rng(4);
  Tensor<double> x = testing::random_tensor({8, 3, 5, 5}, rng, -3.0, 7.0);
  const Tensor<double> y = bn.forward(x, Mode::kTrain);
  for (int c = 0; c < 3; ++c) {
    double mean = 0.0, sq = 0.0;
    const int n = 8 * 25;
    for (int i = 0; i < 8; ++i) {
      for (int k = 0; k < 25; ++k) mean += y.at(i, c, k / 5, k % 5);
    }
    mean /= n;
    for (int i = 0; i < 8; ++i) {
      for (int k = 0; k < 25; ++k) sq += std::pow(y.at(i, c, k / 5, k % 5) - mean, 2);
    }
    CHECK(std::abs(mean) < 1e-5);
    // eps = 1e-5 shifts the variance by about var / (var + eps)
    CHECK(std::abs(sq / n - 1.0) < 1e-4);
  }
}

TEST_CASE("identical seeds and batches give bitwise-identical parameters") {
  auto run = [] {
    space::SearchSpace s = space::SearchSpace::desk();
    s.image_size = 8;
    Rng rng(5);
    ParamStore<float> st = supernet::init_supernet_params(s, rng);
    const space::ArchGenome a = space::decode("n=2; blocks=RES/16/1,VGG/8/1").arch;
    supernet::Network<float> net(s, a, st);
    Optimizer<float> opt(OptimizerConfig{});
    Rng data(6);
    for (int step = 0; step < 5; ++step) {
      Tensor<float> x({4, 3, 8, 8});
      std::normal_distribution<float> nd;
      for (float& v : x.vec()) v = nd(data);
      st.clear_grads();
      Tensor<float> grad;
      softmax_cross_entropy(net.forward(x, Mode::kTrain), std::vector<int>{0, 1, 2, 3}, &grad);
      net.backward(grad);
      opt.step(st);
    }
    return st;
  };
  const auto a = run(), b = run();
  for (const auto& [name, p] : a.all()) CHECK(p.value == b.get(name).value);
}

TEST_CASE("checkpoint round trip preserves names, shapes and bytes") {
  ParamStore<float> st;
  auto& a = st.add("x.w", {2, 3});
  auto& b = st.add("x.mean", {3}, false);
  for (std::size_t i = 0; i < a.size(); ++i) a.value[i] = 0.25f * static_cast<float>(i) - 1.0f;
  b.value = {1.5f, -2.0f, 3.25f};
  Checkpoint ck;
  ck.header["kind"] = "test";
  ck.put_params(st);
  const auto path = std::filesystem::temp_directory_path() / "pimnas_ckpt_test.ckpt";
  ck.save(path);
  const Checkpoint back = Checkpoint::load(path);
  CHECK(back.header["kind"] == "test");
  ParamStore<float> out;
  back.get_params(out);
  CHECK(out.get("x.w").shape == std::vector<int>{2, 3});
  CHECK(out.get("x.w").value == a.value);
  CHECK(out.get("x.mean").value == b.value);
  std::filesystem::remove(path);
  CHECK_THROWS(Checkpoint::load(path));
}
