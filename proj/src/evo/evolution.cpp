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


#include "pimnas/evo/evolution.hpp"

#include <algorithm>
#include <cmath>

namespace pimnas::evo {

void EvolutionConfig::validate() const {
  auto fail = [](const std::string& m) { throw SearchError("evolution config: " + m); };
  if (population < 1) fail("population must be >= 1");
  if (cycles < 0) fail("cycles must be >= 0");
  if (topk < 1) fail("topk must be >= 1");
  if (crossover < 0 || mutation < 0) fail("crossover and mutation counts must be >= 0");
  if (crossover + mutation != population) fail("crossover + mutation must equal the population");
  for (double p : {mutation_prob, quant_prob, pim_prob}) {
    if (!(p >= 0.0 && p <= 1.0)) fail("probabilities must lie in [0, 1]");
  }
  if (!(w_acc >= 0.0 && w_acc <= 1.0)) fail("w_acc must lie in [0, 1]");
  if (infeasible_retries < 0) fail("infeasible_retries must be >= 0");
}

void to_json(nlohmann::json& j, const EvolutionConfig& c) {
  j = nlohmann::json{{"population", c.population},     {"cycles", c.cycles},
                     {"topk", c.topk},                 {"crossover", c.crossover},
                     {"mutation", c.mutation},         {"mutation_prob", c.mutation_prob},
                     {"quant_prob", c.quant_prob},     {"pim_prob", c.pim_prob},
                     {"w_acc", c.w_acc},               {"seed", c.seed},
                     {"infeasible_retries", c.infeasible_retries}};
}

void from_json(const nlohmann::json& j, EvolutionConfig& c) {
  EvolutionConfig d;
  d.population = j.value("population", d.population);
  // crossover/mutation default to an even split of the population
  d.crossover = j.value("crossover", d.population / 2);
  d.mutation = j.value("mutation", d.population - d.crossover);
  d.cycles = j.value("cycles", d.cycles);
  d.topk = j.value("topk", d.topk);
  d.mutation_prob = j.value("mutation_prob", d.mutation_prob);
  d.quant_prob = j.value("quant_prob", d.quant_prob);
  d.pim_prob = j.value("pim_prob", d.pim_prob);
  d.w_acc = j.value("w_acc", d.w_acc);
  d.seed = j.value("seed", d.seed);
  d.infeasible_retries = j.value("infeasible_retries", d.infeasible_retries);
  c = d;
}

double fitness(double accuracy, double edp_norm, double w_acc) {
  return w_acc * accuracy - (1.0 - w_acc) * edp_norm;
}

nlohmann::json to_json(const Candidate& c) {
  auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
  nlohmann::json j{{"cycle", c.cycle},
                   {"genome", c.genome},
                   {"accuracy", num(c.eval.accuracy)},
                   {"energy", num(c.eval.energy)},
                   {"latency", num(c.eval.latency)},
                   {"edp", num(c.eval.edp)},
                   {"edp_norm", num(c.eval.edp_norm)},
                   {"fitness", num(c.fitness)},
                   {"order", c.order},
                   {"cache_hit", c.cache_hit},
                   {"wallclock", c.wallclock}};
  if (!c.eval.ok) j["error"] = c.eval.error;
  return j;
}

TopKArchive::TopKArchive(std::size_t k) : k_(k) {
  if (k == 0) throw SearchError("top-k archive needs k >= 1");
}

bool TopKArchive::update(const Candidate& c) {
  if (c.failed() || seen_.count(c.genome)) return false;
  seen_.insert(c.genome);
  auto before = [](const Candidate& a, const Candidate& b) {
    if (a.fitness != b.fitness) return a.fitness > b.fitness;
    return a.order < b.order;
  };
  auto pos = std::upper_bound(items_.begin(), items_.end(), c, before);
  if (static_cast<std::size_t>(pos - items_.begin()) >= k_) return false;
  items_.insert(pos, c);
  if (items_.size() > k_) items_.pop_back();
  return true;
}

void TopKArchive::update(std::span<const Candidate> cs) {
  for (const Candidate& c : cs) update(c);
}

const Candidate& TopKArchive::best() const {
  if (items_.empty()) throw SearchError("top-k archive is empty");
  return items_.front();
}

double TopKArchive::best_fitness() const { return best().fitness; }

}  // namespace pimnas::evo
