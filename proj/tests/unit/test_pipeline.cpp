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

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <Eigen/Dense>

#include "pimnas/pipeline/pipeline.hpp"

using namespace pimnas;
using namespace pimnas::pipeline;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("pimnas_unit_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

nn::ImageSet random_records(int n, std::uint64_t seed) {
  Rng rng(seed);
  nn::ImageSet s;
  s.channels = 3;
  s.height = s.width = 32;
  for (int i = 0; i < n; ++i) {
    s.labels.push_back(std::uniform_int_distribution<int>(0, 9)(rng));
    for (int k = 0; k < 3072; ++k) {
      s.pixels.push_back(static_cast<float>(std::uniform_int_distribution<int>(0, 255)(rng)) / 255.0f);
    }
  }
  return s;
}

// A run small enough for a unit test: 8x8 inputs, depth <= 2, one epoch per phase.
std::vector<std::string> tiny_run(const fs::path& out, const std::string& w_acc) {
  return {"output_dir=" + out.string(),
          "seed=3",
          "w_acc=" + w_acc,
          "space.name=desk",
          "space.image_size=8",
          "space.d_max=2",
          "space.head_pool=2",
          "space.channel_choices=[4,8]",
          "dataset.synthetic.train=256",
          "dataset.synthetic.val=64",
          "dataset.synthetic.test=64",
          "supernet.epochs=1",
          "supernet.batch_size=64",
          "arch_search.evolution.population=4",
          "arch_search.evolution.cycles=1",
          "arch_search.evolution.topk=2",
          "arch_search.bn_batches=1",
          "arch_search.bn_batch_size=64",
          "pretrain.epochs=1",
          "pretrain.batch_size=64",
          "pretrain.milestones=[]",
          "quant_train.epochs=1",
          "quant_train.batch_size=64",
          "quant_train.period=0",
          "quant_search.evolution.population=4",
          "quant_search.evolution.cycles=1",
          "quant_search.evolution.topk=2",
          "quant_search.bn_batches=1",
          "quant_search.bn_batch_size=64",
          "finetune.epochs=1",
          "finetune.batch_size=64",
          "finetune.period=0"};
}

}  // namespace

TEST_CASE("CIFAR-10 binary records") {
  const fs::path dir = scratch("cifar");
  const nn::ImageSet ten = random_records(10, 1);
  write_cifar10_binary(dir / "ten.bin", ten);
  CHECK(fs::file_size(dir / "ten.bin") == 30730);
  const nn::ImageSet back = read_cifar10_binary(dir / "ten.bin");
  CHECK(back.size() == 10);
  CHECK(back.labels == ten.labels);
  CHECK(back.pixels == ten.pixels);

  fs::resize_file(dir / "ten.bin", 30730 - 100);
  try {
    read_cifar10_binary(dir / "ten.bin");
    FAIL("expected an error");
  } catch (const DataError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("30630") != std::string::npos);
    CHECK(msg.find("3073") != std::string::npos);
  }
  CHECK_THROWS_AS(read_cifar10_binary(dir / "missing.bin"), DataError);
  fs::remove_all(dir);
}

TEST_CASE("synthetic data") {
  SyntheticParams p;
  p.train = 200;
  p.val = 50;
  p.test = 50;
  const Dataset a = make_synthetic(p, 4), b = make_synthetic(p, 4), c = make_synthetic(p, 5);
  CHECK(a.train.pixels == b.train.pixels);
  CHECK(a.test.labels == b.test.labels);
  CHECK(a.train.pixels != c.train.pixels);
  CHECK(a.train.size() == 200);
  p.num_classes = 1;
  CHECK_THROWS(make_synthetic(p, 4));
  p.num_classes = 10;
  p.clutter = -1;
  CHECK_THROWS(make_synthetic(p, 4));
}

TEST_CASE("highly separable synthetic data admits a linear probe") {
  SyntheticParams p;
  p.noise = 0.1;
  p.clutter = 0;
  p.jitter = 0;
  p.train = 1000;
  p.test = 500;
  const Dataset d = make_synthetic(p, 6);
  // least-squares one-vs-all linear classifier with a bias column
  const int dim = static_cast<int>(d.train.image_size()) + 1;
  Eigen::MatrixXd X(d.train.size(), dim), Y = Eigen::MatrixXd::Zero(d.train.size(), 10);
  for (std::size_t i = 0; i < d.train.size(); ++i) {
    for (int k = 0; k + 1 < dim; ++k) X(i, k) = d.train.image(i)[k];
    X(i, dim - 1) = 1.0;
    Y(i, d.train.labels[i]) = 1.0;
  }
  const Eigen::MatrixXd A = X.transpose() * X + 1e-2 * Eigen::MatrixXd::Identity(dim, dim);
  const Eigen::MatrixXd W = A.ldlt().solve(X.transpose() * Y);
  int hit = 0;
  for (std::size_t i = 0; i < d.test.size(); ++i) {
    Eigen::RowVectorXd x(dim);
    for (int k = 0; k + 1 < dim; ++k) x(k) = d.test.image(i)[k];
    x(dim - 1) = 1.0;
    Eigen::Index best;
    (x * W).maxCoeff(&best);
    hit += static_cast<int>(best) == d.test.labels[i];
  }
  const double acc = static_cast<double>(hit) / d.test.size();
  INFO("probe accuracy " << acc);
  CHECK(acc >= 0.95);
}

TEST_CASE("configuration defaults, overrides and unknown keys") {
  const RunConfig d = load_config({}, {});
  CHECK(d.supernet.lr == 0.1);
  CHECK(d.supernet.batch_size == 128);
  CHECK(d.arch_search.evolution.population == 50);
  CHECK(d.quant_search.evolution.pim_prob == 0.5);
  CHECK(d.space == space::SearchSpace::table1());
  CHECK(d.dataset.synthetic.image_size == 32);

  const RunConfig o = load_config({}, {"supernet.lr=0.05", "arch_search.evolution.population=10", "w_acc=[0.3]"});
  CHECK(o.supernet.lr == 0.05);
  CHECK(o.arch_search.evolution.crossover + o.arch_search.evolution.mutation == 10);
  CHECK(o.w_acc == std::vector<double>{0.3});

  CHECK_THROWS_WITH_AS(load_config({}, {"supernet.learning_rate=0.05"}), doctest::Contains("learning_rate"),
                       ConfigError);
  CHECK_THROWS_AS(load_config({}, {"w_acc=[1.5]"}), ConfigError);
  CHECK_THROWS_AS(load_config({}, {"nonsense"}), ConfigError);

  const fs::path dir = scratch("config");
  {
    std::ofstream os(dir / "c.json");
    os << R"({"seed": 5, "space": {"name": "desk"}, "dataset": {"synthetic": {"train": 100}}})";
  }
  const RunConfig f = load_config(dir / "c.json", {"seed=6"});
  CHECK(f.seed == 6);
  CHECK(f.space.name == "desk");
  CHECK(f.dataset.synthetic.train == 100);
  CHECK(f.dataset.synthetic.image_size == 16);
  // the written configuration reads back to the same value
  CHECK(to_json_value(from_json_value(to_json_value(f))) == to_json_value(f));
  fs::remove_all(dir);
}

TEST_CASE("artifact hashing") {
  CHECK(git_blob_sha1("") == "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
  CHECK(git_blob_sha1("hello\n") == "ce013625030ba8dba906f756967f9e9ca394464a");
  const fs::path dir = scratch("hash");
  {
    std::ofstream(dir / "a.json") << R"({"x": 1, "search_wallclock_s": 3.5, "inner": {"wallclock": 2}})";
    std::ofstream(dir / "b.json") << R"({"x": 1, "search_wallclock_s": 9.0, "inner": {"wallclock": 7}})";
    std::ofstream(dir / "a.csv") << "w,genome,search_wallclock_s\n1,\"n=1; blocks=VGG/8/1\",4\n";
    std::ofstream(dir / "b.csv") << "w,genome,search_wallclock_s\n1,\"n=1; blocks=VGG/8/1\",8\n";
  }
  CHECK(canonical_content(dir / "a.json") == canonical_content(dir / "b.json"));
  CHECK(canonical_content(dir / "a.csv") == canonical_content(dir / "b.csv"));
  CHECK(canonical_content(dir / "a.csv").find("n=1; blocks=VGG/8/1") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("report on an empty sweep writes only the header") {
  const fs::path out = scratch("empty");
  RunConfig c = load_config({}, {"output_dir=" + out.string(), "w_acc=[]", "space.name=desk"});
  Pipeline p(c);
  p.report();
  CHECK(slurp(out / "pareto.csv") ==
        "w_acc,genome,accuracy,val_accuracy,energy_mj,latency_ms,edp,edp_norm,area_mm2,fitness,search_wallclock_s\n");
  fs::remove_all(out);
}

TEST_CASE("report names a missing artifact") {
  const fs::path out = scratch("missing");
  RunConfig c = load_config({}, {"output_dir=" + out.string(), "w_acc=[1.0]", "space.name=desk"});
  Pipeline p(c);
  CHECK_THROWS_WITH(p.report(), doctest::Contains("final.json"));
  fs::remove_all(out);
}

TEST_CASE("tiny end-to-end run") {
  const fs::path out = scratch("run");
  Pipeline p(load_config({}, tiny_run(out, "[1.0]")));
  p.run_all();
  const fs::path w = out / "w1.00";

  const auto summary = nlohmann::json::parse(slurp(out / "summary.json"));
  REQUIRE(summary.at("rows").size() == 1);
  const auto& row = summary["rows"][0];
  CHECK(row.at("fitness").get<double>() == row.at("accuracy").get<double>());
  CHECK(row.at("edp").get<double>() ==
        doctest::Approx(row.at("energy_mj").get<double>() * row.at("latency_ms").get<double>()).epsilon(1e-9));

  // the reported accuracy is what the prediction file says
  std::ifstream pred(w / "predictions.csv");
  std::string line;
  std::getline(pred, line);
  CHECK(line == "index,label,prediction");
  int n = 0, hit = 0;
  while (std::getline(pred, line)) {
    int i, label, guess;
    REQUIRE(std::sscanf(line.c_str(), "%d,%d,%d", &i, &label, &guess) == 3);
    CHECK(i == n);
    hit += label == guess;
    ++n;
  }
  CHECK(n == 64);
  CHECK(row.at("accuracy").get<double>() == doctest::Approx(static_cast<double>(hit) / n));

  // searches score candidates on validation images only
  for (const char* log : {"arch_search.jsonl", "quant_search.jsonl"}) {
    const std::string text = slurp(w / log);
    CHECK(!text.empty());
    CHECK(text.find("test") == std::string::npos);
  }

  // a second pipeline on the same directory finds everything done
  Pipeline again(load_config({}, tiny_run(out, "[1.0]")));
  for (const auto& s : step_names()) CHECK(again.step_done(s));
  // and a different configuration is refused
  CHECK_THROWS(Pipeline(load_config({}, [&] {
    auto o = tiny_run(out, "[1.0]");
    o.push_back("seed=4");
    return o;
  }())));

  const auto manifest = nlohmann::json::parse(slurp(out / "manifest.json"));
  bool has_pred = false;
  for (const auto& a : manifest.at("artifacts")) has_pred |= a.at("path") == "w1.00/predictions.csv";
  CHECK(has_pred);
  fs::remove_all(out);
}

TEST_CASE("cost subcommand") {
  const fs::path dir = scratch("cli");
  const std::string genome = "n=2; blocks=VGG/32/1,RES/64/1; quant=5:5,7:7,9:9,5:9,9:5; pim=128/6/1";
  const std::string cmd = std::string(PIMNAS_CLI) + " cost --space table1 -g \"" + genome + "\" -o " +
                          (dir / "cost.json").string();
  REQUIRE(std::system(cmd.c_str()) == 0);
  const auto j = nlohmann::json::parse(slurp(dir / "cost.json"));
  const space::SearchSpace s = space::SearchSpace::table1();
  const space::Genome g = space::decode(genome);
  const pim::HardwareReport r = pim::estimate_network(g.arch, *g.quant, *g.pim, s, pim::HardwareParams{});
  CHECK(j.at("edp").get<double>() == doctest::Approx(r.edp).epsilon(1e-12));
  CHECK(j.at("genome") == genome);
  const std::string bad = std::string(PIMNAS_CLI) + " cost -g \"n=1; blocks=VGG/33/1\" -o " +
                          (dir / "bad.json").string() + " 2> " + (dir / "err.txt").string();
  CHECK(std::system(bad.c_str()) != 0);
  CHECK(slurp(dir / "err.txt").find("pimnas: error") != std::string::npos);
  fs::remove_all(dir);
}
