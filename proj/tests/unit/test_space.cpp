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

#include <map>

#include "common/oracles.hpp"
#include "pimnas/space/search_space.hpp"

using namespace pimnas;
using namespace pimnas::space;

TEST_CASE("singleton domain samples the unique genome") {
  SearchSpace s = SearchSpace::table1();
  s.d_max = 1;
  s.block_types = {BlockType::kVgg};
  s.channel_choices = {64};
  Rng rng(3);
  for (int i = 0; i < 20; ++i) CHECK(encode(sample_arch(s, rng)) == "n=1; blocks=VGG/64/1");
}

TEST_CASE("block type at a fixed slot is uniform") {
  const SearchSpace s = SearchSpace::table1();
  Rng rng(4);
  std::vector<long> counts(3, 0);
  int seen = 0;
  while (seen < 10000) {
    const ArchGenome a = sample_arch(s, rng);
    counts[static_cast<int>(a.blocks[0].type)]++;
    ++seen;
  }
  const double p = testing::chi_square_uniform_p(counts);
  INFO(counts[0] << " " << counts[1] << " " << counts[2]);
  CHECK(p > 0.01);
}

TEST_CASE("feasibility follows the pooling arithmetic") {
  const SearchSpace s = SearchSpace::table1();
  ArchGenome six;
  six.blocks.assign(6, {BlockType::kVgg, 32, 1});
  CHECK(!is_feasible(six, s));
  CHECK(!arch_violation(six, s).empty());
  ArchGenome five;
  five.blocks.assign(5, {BlockType::kVgg, 32, 1});
  CHECK(is_feasible(five, s));
  ArchGenome res;
  res.blocks.assign(8, {BlockType::kRes, 128, 1});
  CHECK(is_feasible(res, s));
  // sampling never returns an infeasible genome
  Rng rng(5);
  for (int i = 0; i < 500; ++i) CHECK(is_feasible(sample_arch(s, rng), s));
}

TEST_CASE("space sizes") {
  CHECK(space_size(SearchSpace::table1()) == 48427560ULL);
  SearchSpace two = SearchSpace::table1();
  two.d_max = 2;
  CHECK(space_size(two) == 90);
  SearchSpace one = SearchSpace::table1();
  one.block_types = {BlockType::kRes};
  one.channel_choices = {32};
  CHECK(space_size(one) == 8);
  SearchSpace three = SearchSpace::table1();
  three.d_max = 3;
  CHECK(space_size(three) == 819);
  CHECK(enumerate_archs(three).size() == 819);
}

TEST_CASE("quantizable layer counts") {
  const SearchSpace s = SearchSpace::table1();
  CHECK(quantizable_layers(decode("n=1; blocks=VGG/32/1").arch, s).size() == 2);
  CHECK(quantizable_layers(decode("n=2; blocks=RES/64/1,VGG/32/1").arch, s).size() == 5);
  const ArchGenome mixed = decode("n=4; blocks=VGG/32/1,MVGG/64/1,RES/128/1,RES/128/1").arch;
  CHECK(quantizable_layers(mixed, s).size() == 2 + 2 + 3 + 3);
  // residual shortcut is a 1x1 projection with the block's output width
  const auto L = quantizable_layers(decode("n=1; blocks=RES/64/1").arch, s);
  CHECK(L[2].kind == LayerKind::kConv1x1);
  CHECK(L[2].rows() == 3);
  CHECK(L[2].out_channels == 64);
  CHECK(L[0].rows() == 27);
  CHECK(L[1].rows() == 64 * 9);
}

TEST_CASE("genome text round trip") {
  const SearchSpace s = SearchSpace::table1();
  Rng rng(6);
  for (int i = 0; i < 200; ++i) {
    Genome g;
    g.arch = sample_arch(s, rng);
    if (i % 2 == 0) {
      g.quant = sample_quant(static_cast<int>(quantizable_layers(g.arch, s).size()), s, rng);
      g.pim = sample_pim(s, rng);
    }
    CHECK(decode(encode(g)) == g);
  }
}

TEST_CASE("malformed genomes are rejected") {
  CHECK_THROWS_AS(decode(""), GenomeError);
  CHECK_THROWS_AS(decode("n=2; blocks=VGG/32/1"), GenomeError);
  CHECK_THROWS_AS(decode("n=1; blocks=FOO/32/1"), GenomeError);
  CHECK_THROWS_AS(decode("n=1; blocks=VGG/x/1"), GenomeError);
  const SearchSpace s = SearchSpace::table1();
  CHECK_THROWS_AS(check(decode("n=1; blocks=VGG/48/1"), s), GenomeError);
  CHECK_THROWS_AS(check(decode("n=1; blocks=VGG/32/2"), s), GenomeError);
  CHECK_THROWS_AS(check(decode("n=1; blocks=VGG/32/1; quant=5:5"), s), GenomeError);
  CHECK_THROWS_AS(check(decode("n=1; blocks=VGG/32/1; quant=5:5,6:5"), s), GenomeError);
  CHECK_THROWS_AS(check(decode("n=1; blocks=VGG/32/1; pim=100/8/2"), s), GenomeError);
  CHECK_NOTHROW(check(decode("n=1; blocks=VGG/32/1; quant=5:5,9:7; pim=64/6/1"), s));
}

TEST_CASE("profiles round trip through JSON") {
  for (const char* name : {"table1", "desk", "table1-stride2"}) {
    const SearchSpace s = SearchSpace::by_name(name);
    nlohmann::json j = s;
    CHECK(j.get<SearchSpace>() == s);
  }
  CHECK_THROWS(SearchSpace::by_name("nope"));
  CHECK_THROWS(nlohmann::json{{"name", "nope"}, {"d_max", 2}}.get<SearchSpace>());
  SearchSpace custom = SearchSpace::desk();
  custom.name = "custom";
  custom.channel_choices = {4, 12};
  nlohmann::json j = custom;
  CHECK(j.get<SearchSpace>() == custom);
}
