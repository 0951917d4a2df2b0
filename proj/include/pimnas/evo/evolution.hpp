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

#include <chrono>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "pimnas/rng.hpp"

namespace pimnas::evo {

class SearchError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EvolutionConfig {
  int population = 50;
  int cycles = 10;
  int topk = 10;
  int crossover = 25;
  int mutation = 25;
  double mutation_prob = 0.1;  // architecture genes
  double quant_prob = 0.1;     // bit-width genes
  double pim_prob = 0.5;       // circuit genes
  double w_acc = 1.0;
  std::uint64_t seed = 0;
  int infeasible_retries = 10;

  void validate() const;
};

void to_json(nlohmann::json& j, const EvolutionConfig& c);
void from_json(const nlohmann::json& j, EvolutionConfig& c);

double fitness(double accuracy, double edp_norm, double w_acc);

struct Evaluation {
  bool ok = true;
  std::string error;
  double accuracy = 0.0;
  double energy = 0.0;
  double latency = 0.0;
  double edp = 0.0;
  double edp_norm = 0.0;
};

struct Candidate {
  std::string genome;
  Evaluation eval;
  double fitness = -std::numeric_limits<double>::infinity();
  int cycle = 0;
  long order = 0;  // index of first evaluation; earlier wins ties
  bool cache_hit = false;
  double wallclock = 0.0;

  bool failed() const { return !eval.ok || !(fitness > -std::numeric_limits<double>::infinity()); }
};

nlohmann::json to_json(const Candidate& c);

/// Best-k distinct genomes, sorted by descending fitness, ties by order.
class TopKArchive {
 public:
  explicit TopKArchive(std::size_t k);
  /// Returns true when the archive changed. Failed candidates and genomes
  /// seen before are ignored.
  bool update(const Candidate& c);
  void update(std::span<const Candidate> cs);
  const std::vector<Candidate>& items() const { return items_; }
  bool empty() const { return items_.empty(); }
  std::size_t size() const { return items_.size(); }
  const Candidate& best() const;
  double best_fitness() const;

 private:
  std::size_t k_;
  std::vector<Candidate> items_;
  std::unordered_set<std::string> seen_;
};

struct EvolutionResult {
  Candidate best;
  std::vector<Candidate> log;  // every evaluation request in order
  std::vector<double> best_per_cycle;
  std::vector<Candidate> archive;
  long requests = 0;
  long evaluations = 0;  // evaluator calls (cache misses)
  long cache_hits = 0;
};

/// Evaluates one genome; `seed` is the candidate's private RNG stream seed.
template <typename G>
using Evaluator = std::function<Evaluation(const G&, std::uint64_t seed)>;

/// Algorithm-1 style evolution over a Domain providing:
///   using Genome; Genome sample(Rng&); Genome crossover(const Genome&,
///   const Genome&, Rng&); Genome mutate(const Genome&, const
///   EvolutionConfig&, Rng&); bool feasible(const Genome&); std::string
///   encode(const Genome&).
template <typename Domain>
EvolutionResult run_evolution(Domain& domain, const Evaluator<typename Domain::Genome>& evaluate,
                              const EvolutionConfig& config, std::ostream* log = nullptr) {
  using Genome = typename Domain::Genome;
  config.validate();
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(derive_seed(config.seed, "evolution"));
  EvolutionResult result;
  TopKArchive archive(static_cast<std::size_t>(config.topk));
  std::map<std::string, std::pair<Evaluation, long>> cache;
  std::map<std::string, Genome> genomes;

  auto score = [&](const Evaluation& e) {
    if (!e.ok) return -std::numeric_limits<double>::infinity();
    return fitness(e.accuracy, e.edp_norm, config.w_acc);
  };

  auto evaluate_all = [&](const std::vector<Genome>& pop, int cycle) {
    std::vector<Candidate> out;
    for (const Genome& g : pop) {
      Candidate c;
      c.genome = domain.encode(g);
      c.cycle = cycle;
      auto it = cache.find(c.genome);
      if (it != cache.end()) {
        c.eval = it->second.first;
        c.order = it->second.second;
        c.cache_hit = true;
        ++result.cache_hits;
      } else {
        if (!domain.feasible(g)) {
          c.eval.ok = false;
          c.eval.error = "infeasible genome";
        } else {
          try {
            c.eval = evaluate(g, derive_seed(config.seed, c.genome));
          } catch (const std::exception& e) {
            c.eval = Evaluation{};
            c.eval.ok = false;
            c.eval.error = e.what();
          }
        }
        c.order = result.evaluations++;
        cache.emplace(c.genome, std::make_pair(c.eval, c.order));
        genomes.emplace(c.genome, g);
      }
      c.fitness = score(c.eval);
      c.wallclock = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      ++result.requests;
      if (log) *log << to_json(c).dump() << "\n";
      result.log.push_back(c);
      out.push_back(std::move(c));
    }
    return out;
  };

  auto feasible_child = [&](auto&& make) {
    Genome child = make();
    for (int i = 0; i < config.infeasible_retries && !domain.feasible(child); ++i) child = make();
    return child;
  };

  std::vector<Genome> pop;
  for (int i = 0; i < config.population; ++i) pop.push_back(domain.sample(rng));

  double previous_best = -std::numeric_limits<double>::infinity();
  for (int cycle = 0;; ++cycle) {
    std::vector<Candidate> evaluated = evaluate_all(pop, cycle);
    archive.update(evaluated);
    const double best = archive.empty() ? -std::numeric_limits<double>::infinity() : archive.best_fitness();
    if (best < previous_best) throw SearchError("top-k best fitness decreased");
    previous_best = best;
    result.best_per_cycle.push_back(best);
    if (cycle == config.cycles) break;

    pop.clear();
    const auto& parents = archive.items();
    for (int i = 0; i < config.crossover; ++i) {
      if (parents.empty()) {
        pop.push_back(domain.sample(rng));
        continue;
      }
      pop.push_back(feasible_child([&] {
        if (parents.size() == 1) return genomes.at(parents[0].genome);  // self-crossover is a copy
        std::uniform_int_distribution<std::size_t> pick(0, parents.size() - 1);
        const std::size_t a = pick(rng);
        std::size_t b = pick(rng);
        while (b == a) b = pick(rng);
        return domain.crossover(genomes.at(parents[a].genome), genomes.at(parents[b].genome), rng);
      }));
    }
    for (int i = 0; i < config.mutation; ++i) {
      if (parents.empty()) {
        pop.push_back(domain.sample(rng));
        continue;
      }
      pop.push_back(feasible_child([&] {
        std::uniform_int_distribution<std::size_t> pick(0, parents.size() - 1);
        return domain.mutate(genomes.at(parents[pick(rng)].genome), config, rng);
      }));
    }
  }

  result.archive = archive.items();
  if (archive.empty()) throw SearchError("every evaluated candidate failed");
  result.best = archive.best();
  return result;
}

}  // namespace pimnas::evo
