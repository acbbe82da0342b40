// Copyright 2026 The fusenas Authors.
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

#include "fusenas/search.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <numeric>
#include <thread>

#include "fusenas/arch.hpp"
#include "fusenas/error.hpp"
#include "fusenas/net/network.hpp"
#include "fusenas/seed.hpp"

namespace fusenas {

namespace {

// Seed stream tags.
enum : std::uint64_t { kEvalStream = 1, kOpsStream = 2, kInitStream = 3, kMixStream = 4 };

bool better(const Individual& a, const Individual& b) {
  if (a.fitness != b.fitness) return a.fitness < b.fitness;
  return serialize(a.genome) < serialize(b.genome);
}

void check_population_size(int s) {
  if (s < 2 || s % 2 != 0) {
    throw ConfigError("population size must be even and >= 2, got " + std::to_string(s));
  }
}

}  // namespace

void SearchConfig::validate() const {
  check_population_size(population);
  if (rough_generations < 1 || transfer_generations < 1) {
    throw ConfigError("search generations must be >= 1");
  }
  if (crossover_rate < 0.0 || crossover_rate > 1.0 || mutation_rate < 0.0 ||
      mutation_rate > 1.0) {
    throw ConfigError("crossover and mutation rates must lie in [0, 1]");
  }
  if (search_epochs < 1) throw ConfigError("search epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("search batch size must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("search learning rate must be > 0");
  if (!(rough_fraction > 0.0) || rough_fraction > 1.0) {
    throw ConfigError("rough fraction must lie in (0, 1]");
  }
  if (jobs < 1) throw ConfigError("jobs must be >= 1");
}

void to_json(nlohmann::json& j, const SearchConfig& c) {
  j = {{"population", c.population},
       {"rough_generations", c.rough_generations},
       {"transfer_generations", c.transfer_generations},
       {"crossover_rate", c.crossover_rate},
       {"mutation_rate", c.mutation_rate},
       {"search_epochs", c.search_epochs},
       {"batch_size", c.batch_size},
       {"learning_rate", c.learning_rate},
       {"rough_fraction", c.rough_fraction},
       {"seed", c.seed}};
  // jobs is deliberately left out: it must not change any result.
}

void from_json(const nlohmann::json& j, SearchConfig& c) {
  c.population = j.value("population", c.population);
  c.rough_generations = j.value("rough_generations", c.rough_generations);
  c.transfer_generations = j.value("transfer_generations", c.transfer_generations);
  c.crossover_rate = j.value("crossover_rate", c.crossover_rate);
  c.mutation_rate = j.value("mutation_rate", c.mutation_rate);
  c.search_epochs = j.value("search_epochs", c.search_epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.rough_fraction = j.value("rough_fraction", c.rough_fraction);
  c.seed = j.value("seed", c.seed);
  c.jobs = j.value("jobs", c.jobs);
}

const char* to_string(Origin o) {
  switch (o) {
    case Origin::kRandom: return "random";
    case Origin::kCarried: return "carried";
    case Origin::kOffspring: return "offspring";
  }
  return "?";
}

const Individual& Population::best() const {
  if (members.empty()) throw ConfigError("empty population has no best individual");
  return *std::min_element(members.begin(), members.end(), better);
}

// ---- evaluators ----

TrainerEvaluator::TrainerEvaluator(GeneSpace space, int epochs, int batch_size,
                                   double learning_rate)
    : space_(std::move(space)) {
  train_.epochs = epochs;
  train_.batch_size = batch_size;
  train_.learning_rate = learning_rate;
  train_.validate();
}

net::History TrainerEvaluator::evaluate_with_history(const Genome& g,
                                                     const FitnessData& data,
                                                     std::uint64_t seed) const {
  if (data.valid.empty()) throw DataError("fitness evaluation needs validation windows");
  net::Network n(decode(g, space_), data.num_classes, seed);
  net::TrainConfig cfg = train_;
  cfg.seed = splitmix64(seed);
  return net::train(n, data.train, data.valid, cfg);
}

double TrainerEvaluator::evaluate(const Genome& g, const FitnessData& data,
                                  std::uint64_t seed) const {
  return evaluate_with_history(g, data, seed).back().valid_loss;
}

SurrogateEvaluator::SurrogateEvaluator(GeneSpace space) : space_(std::move(space)) {
  validate(target(), space_);
}

Genome SurrogateEvaluator::target() {
  Genome t;
  t.genes = {2, 1, 1, 3, 5, 7, 2, 4, 6, 8, 1, 9, 1, 0, 5, 1, 1, 2, 1, 6};
  return t;
}

double SurrogateEvaluator::evaluate(const Genome& g, const FitnessData&,
                                    std::uint64_t) const {
  const Genome t = target();
  double sum = 0.0;
  for (int i = 0; i < kGenomeLength; ++i) {
    const double span = std::max(1, space_.ranges[static_cast<std::size_t>(i)].span());
    const double d = (g[i] - t[i]) / span;
    sum += d * d;
  }
  return kOptimum + sum / kGenomeLength;
}

// ---- evaluation ----

void evaluate_individual(Individual& ind, const FitnessEvaluator& ev,
                         const FitnessData& data) {
  double loss = kFailedFitness;
  try {
    loss = ev.evaluate(ind.genome, data, ind.seed);
  } catch (const NumericError&) {
    loss = kFailedFitness;
  }
  ind.evaluated = true;
  ind.failed = !std::isfinite(loss);
  ind.fitness = ind.failed ? kFailedFitness : loss;
}

void evaluate_all(std::span<Individual> members, const FitnessEvaluator& ev,
                  const FitnessData& data, int jobs) {
  std::vector<std::size_t> todo;
  for (std::size_t i = 0; i < members.size(); ++i) {
    if (!members[i].evaluated) todo.push_back(i);
  }
  const auto workers = static_cast<std::size_t>(std::max(1, jobs));
  if (workers == 1 || todo.size() < 2) {
    for (std::size_t i : todo) evaluate_individual(members[i], ev, data);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(todo.size());
  auto work = [&] {
    for (std::size_t k = next++; k < todo.size(); k = next++) {
      try {
        evaluate_individual(members[todo[k]], ev, data);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < std::min(workers, todo.size()); ++t) pool.emplace_back(work);
  for (std::thread& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

// ---- selection ----

std::vector<double> roulette_weights(std::span<const Individual> pop) {
  double lo = kFailedFitness, hi = -kFailedFitness;
  for (const Individual& ind : pop) {
    if (!std::isfinite(ind.fitness)) continue;
    lo = std::min(lo, ind.fitness);
    hi = std::max(hi, ind.fitness);
  }
  std::vector<double> w(pop.size());
  if (!(lo <= hi)) {  // nothing finite
    std::fill(w.begin(), w.end(), 1.0);
    return w;
  }
  const double delta = 1e-6 * (hi - lo + 1.0);
  for (std::size_t i = 0; i < pop.size(); ++i) {
    w[i] = std::isfinite(pop[i].fitness) ? (hi - pop[i].fitness) + delta : delta;
  }
  return w;
}

std::pair<std::size_t, std::size_t> roulette_select(std::span<const Individual> pop,
                                                    Rng& rng) {
  if (pop.empty()) throw ConfigError("roulette selection on an empty population");
  const std::vector<double> w = roulette_weights(pop);
  std::discrete_distribution<std::size_t> wheel(w.begin(), w.end());
  const std::size_t a = wheel(rng);
  const std::size_t b = wheel(rng);
  return {a, b};
}

Population environmental_select(std::span<const Individual> parents,
                                std::span<const Individual> offspring, int size) {
  if (size < 0 || parents.size() + offspring.size() < static_cast<std::size_t>(size)) {
    throw ConfigError("selection pool of " +
                      std::to_string(parents.size() + offspring.size()) +
                      " is smaller than " + std::to_string(size));
  }
  std::vector<Individual> pool(parents.begin(), parents.end());
  pool.insert(pool.end(), offspring.begin(), offspring.end());
  for (const Individual& ind : pool) {
    if (!ind.evaluated) throw ConfigError("environmental selection on unevaluated individual");
  }
  std::stable_sort(pool.begin(), pool.end(), better);
  pool.resize(static_cast<std::size_t>(size));
  Population out;
  out.members = std::move(pool);
  return out;
}

// ---- phases ----

namespace {

GenerationStats stats_of(const Population& p, int evaluations) {
  GenerationStats s;
  s.generation = p.generation;
  s.evaluations = evaluations;
  s.best_loss = p.best().fitness;
  double sum = 0.0;
  int finite = 0;
  for (const Individual& ind : p.members) {
    if (ind.failed) {
      ++s.failed;
    } else {
      sum += ind.fitness;
      ++finite;
    }
  }
  s.mean_loss = finite ? sum / finite : std::nan("");
  return s;
}

// Runs `generations` rounds from an evaluated starting population.
void evolve(PhaseResult& r, const SearchConfig& cfg, const GeneSpace& space,
            const FitnessData& data, const FitnessEvaluator& ev, std::uint64_t phase,
            int generations) {
  const auto s = static_cast<std::size_t>(cfg.population);
  Population pop = r.start;
  r.log.push_back(stats_of(pop, r.evaluations));
  for (int gen = 1; gen <= generations; ++gen) {
    const auto g64 = static_cast<std::uint64_t>(gen);
    Rng ops(derive_seed(cfg.seed, {kOpsStream, phase, g64}));
    std::vector<Individual> offspring;
    offspring.reserve(s);
    while (offspring.size() < s) {
      const auto [i, j] = roulette_select(pop.members, ops);
      auto [c1, c2] = crossover(pop.members[i].genome, pop.members[j].genome,
                                cfg.crossover_rate, space, ops);
      for (Genome* c : {&c1, &c2}) {
        Individual child;
        child.genome = mutate(*c, cfg.mutation_rate, space, ops);
        child.origin = Origin::kOffspring;
        child.seed = derive_seed(cfg.seed, {kEvalStream, phase, g64, offspring.size()});
        offspring.push_back(std::move(child));
      }
    }
    evaluate_all(offspring, ev, data, cfg.jobs);
    r.evaluations += static_cast<int>(offspring.size());
    pop = environmental_select(pop.members, offspring, cfg.population);
    pop.generation = gen;
    r.log.push_back(stats_of(pop, r.evaluations));
  }
  r.final = std::move(pop);
}

void check_phase_config(const SearchConfig& cfg, int generations) {
  check_population_size(cfg.population);
  if (generations < 0) throw ConfigError("generations must be >= 0");
}

}  // namespace

PhaseResult rough_search(const SearchConfig& cfg, const GeneSpace& space,
                         const FitnessData& mixed, const FitnessEvaluator& ev) {
  check_phase_config(cfg, cfg.rough_generations);
  constexpr std::uint64_t phase = 0;
  Rng init(derive_seed(cfg.seed, {kInitStream, phase}));
  PhaseResult r;
  for (int i = 0; i < cfg.population; ++i) {
    Individual ind;
    ind.genome = random_genome(space, init);
    ind.origin = Origin::kRandom;
    ind.seed = derive_seed(cfg.seed, {kEvalStream, phase, 0, static_cast<std::uint64_t>(i)});
    r.start.members.push_back(std::move(ind));
  }
  evaluate_all(r.start.members, ev, mixed, cfg.jobs);
  r.evaluations = cfg.population;
  evolve(r, cfg, space, mixed, ev, phase, cfg.rough_generations);
  return r;
}

PhaseResult transfer_search(const SearchConfig& cfg, const GeneSpace& space,
                            const Population& rough, const FitnessData& data,
                            const FitnessEvaluator& ev, int subset) {
  check_phase_config(cfg, cfg.transfer_generations);
  if (rough.members.size() != static_cast<std::size_t>(cfg.population)) {
    throw ConfigError("rough population has " + std::to_string(rough.members.size()) +
                      " members, expected " + std::to_string(cfg.population));
  }
  const auto phase = 1 + static_cast<std::uint64_t>(subset);
  const int half = cfg.population / 2;
  PhaseResult r;
  Population carried = environmental_select(rough.members, {}, half);
  for (Individual& ind : carried.members) {
    ind.fitness = kFailedFitness;
    ind.evaluated = false;
    ind.failed = false;
    ind.origin = Origin::kCarried;
    r.start.members.push_back(ind);
  }
  Rng init(derive_seed(cfg.seed, {kInitStream, phase}));
  for (int i = 0; i < half; ++i) {
    Individual ind;
    ind.genome = random_genome(space, init);
    ind.origin = Origin::kRandom;
    r.start.members.push_back(std::move(ind));
  }
  for (std::size_t i = 0; i < r.start.members.size(); ++i) {
    r.start.members[i].seed = derive_seed(cfg.seed, {kEvalStream, phase, 0, i});
  }
  evaluate_all(r.start.members, ev, data, cfg.jobs);
  r.evaluations = cfg.population;
  evolve(r, cfg, space, data, ev, phase, cfg.transfer_generations);
  return r;
}

Individual random_search(const SearchConfig& cfg, const GeneSpace& space,
                         const FitnessData& data, const FitnessEvaluator& ev,
                         int budget) {
  if (budget < 1) throw ConfigError("random search budget must be >= 1");
  constexpr std::uint64_t phase = 1000;
  Rng init(derive_seed(cfg.seed, {kInitStream, phase}));
  std::vector<Individual> all(static_cast<std::size_t>(budget));
  for (std::size_t i = 0; i < all.size(); ++i) {
    all[i].genome = random_genome(space, init);
    all[i].seed = derive_seed(cfg.seed, {kEvalStream, phase, 0, i});
  }
  evaluate_all(all, ev, data, cfg.jobs);
  return *std::min_element(all.begin(), all.end(), better);
}

FitnessData mix_datasets(std::span<const FitnessData> subsets, double fraction,
                         std::uint64_t seed) {
  if (subsets.empty()) throw DataError("no sub-datasets to mix");
  if (!(fraction > 0.0) || fraction > 1.0) throw ConfigError("mix fraction must lie in (0, 1]");
  FitnessData out;
  auto take = [&](const Dataset& src, Dataset& dst, std::uint64_t key) {
    if (src.empty()) return;
    std::vector<std::size_t> idx(src.size());
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng(derive_seed(seed, {kMixStream, key}));
    std::shuffle(idx.begin(), idx.end(), rng);
    const auto n = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::floor(fraction * static_cast<double>(src.size()))));
    idx.resize(n);
    std::sort(idx.begin(), idx.end());
    for (std::size_t i : idx) dst.push_back(src[i]);
  };
  for (std::size_t k = 0; k < subsets.size(); ++k) {
    take(subsets[k].train, out.train, 2 * k);
    take(subsets[k].valid, out.valid, 2 * k + 1);
    out.num_classes = std::max(out.num_classes, subsets[k].num_classes);
  }
  return out;
}

nlohmann::json stats_to_json(std::span<const GenerationStats> log) {
  nlohmann::json out = nlohmann::json::array();
  for (const GenerationStats& s : log) {
    out.push_back({{"generation", s.generation},
                   {"best_loss", s.best_loss},
                   {"mean_loss", s.mean_loss},
                   {"failed", s.failed},
                   {"evaluations", s.evaluations}});
  }
  return out;
}

namespace {

nlohmann::json individual_json(const Individual& ind) {
  return {{"genome", serialize(ind.genome)},
          {"fitness", ind.fitness},
          {"failed", ind.failed},
          {"origin", to_string(ind.origin)}};
}

nlohmann::json population_json(const Population& p) {
  nlohmann::json out = nlohmann::json::array();
  for (const Individual& ind : p.members) out.push_back(individual_json(ind));
  return out;
}

}  // namespace

nlohmann::json SearchReport::to_json(const SearchConfig& cfg) const {
  nlohmann::json j;
  j["search"] = cfg;
  j["rough"] = {{"generations", stats_to_json(rough.log)},
                {"evaluations", rough.evaluations},
                {"final_population", population_json(rough.final)}};
  j["transfer"] = nlohmann::json::array();
  for (std::size_t k = 0; k < transfer.size(); ++k) {
    const PhaseResult& t = transfer[k];
    int carried = 0, fresh = 0;
    for (const Individual& ind : t.start.members) {
      (ind.origin == Origin::kCarried ? carried : fresh)++;
    }
    j["transfer"].push_back({{"subset", k},
                             {"start", {{"carried", carried}, {"fresh", fresh}}},
                             {"generations", stats_to_json(t.log)},
                             {"evaluations", t.evaluations},
                             {"best", individual_json(best[k])}});
  }
  j["best_genomes"] = nlohmann::json::array();
  for (const Individual& b : best) j["best_genomes"].push_back(serialize(b.genome));
  return j;
}

SearchReport run_search(const SearchConfig& cfg, const GeneSpace& space,
                        std::span<const FitnessData> subsets, const FitnessEvaluator& ev) {
  cfg.validate();
  if (subsets.empty()) throw DataError("search needs at least one sub-dataset");
  using Clock = std::chrono::steady_clock;
  auto seconds = [](Clock::time_point a) {
    return std::chrono::duration<double>(Clock::now() - a).count();
  };
  SearchReport rep;
  rep.timings = nlohmann::json::object();
  auto t0 = Clock::now();
  const FitnessData mixed = mix_datasets(subsets, cfg.rough_fraction, cfg.seed);
  rep.rough = rough_search(cfg, space, mixed, ev);
  rep.timings["rough_seconds"] = seconds(t0);
  rep.timings["transfer_seconds"] = nlohmann::json::array();
  for (std::size_t k = 0; k < subsets.size(); ++k) {
    t0 = Clock::now();
    rep.transfer.push_back(
        transfer_search(cfg, space, rep.rough.final, subsets[k], ev, static_cast<int>(k)));
    rep.best.push_back(rep.transfer.back().final.best());
    rep.timings["transfer_seconds"].push_back(seconds(t0));
  }
  return rep;
}

}  // namespace fusenas
