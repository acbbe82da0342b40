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

#ifndef FUSENAS_SEARCH_HPP_
#define FUSENAS_SEARCH_HPP_

#include <array>
#include <cstdint>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "fusenas/dataset.hpp"
#include "fusenas/genome.hpp"
#include "fusenas/net/trainer.hpp"

namespace fusenas {

inline constexpr double kFailedFitness = std::numeric_limits<double>::infinity();

struct SearchConfig {
  int population = 20;  // S
  int rough_generations = 20;
  int transfer_generations = 5;
  double crossover_rate = 0.9;
  double mutation_rate = 0.2;
  int search_epochs = 3;  // E_search
  int batch_size = 32;
  double learning_rate = 0.001;
  double rough_fraction = 0.2;  // share of each sub-dataset in the mixed set
  std::uint64_t seed = 1;
  int jobs = 1;

  /// Throws ConfigError. S must be even and >= 2, generations >= 1.
  void validate() const;
};

void to_json(nlohmann::json& j, const SearchConfig& c);
void from_json(const nlohmann::json& j, SearchConfig& c);

enum class Origin { kRandom, kCarried, kOffspring };
const char* to_string(Origin o);

struct Individual {
  Genome genome;
  double fitness = kFailedFitness;  // validation loss, lower is better
  bool evaluated = false;
  bool failed = false;  // evaluation produced a non-finite loss
  std::uint64_t seed = 0;
  Origin origin = Origin::kRandom;
};

struct Population {
  std::vector<Individual> members;
  int generation = 0;

  const Individual& best() const;
};

/// Training and validation windows an individual is scored on.
struct FitnessData {
  Dataset train;
  Dataset valid;
  int num_classes = 0;
};

class FitnessEvaluator {
 public:
  virtual ~FitnessEvaluator() = default;
  /// Loss of `g` on `data`; must be deterministic in (g, data, seed) and
  /// safe to call concurrently.
  virtual double evaluate(const Genome& g, const FitnessData& data,
                          std::uint64_t seed) const = 0;
};

/// Decodes, builds and trains for `epochs`, returning the final-epoch
/// validation loss.
class TrainerEvaluator : public FitnessEvaluator {
 public:
  TrainerEvaluator(GeneSpace space, int epochs, int batch_size = 32,
                   double learning_rate = 0.001);
  double evaluate(const Genome& g, const FitnessData& data,
                  std::uint64_t seed) const override;
  net::History evaluate_with_history(const Genome& g, const FitnessData& data,
                                     std::uint64_t seed) const;

 private:
  GeneSpace space_;
  net::TrainConfig train_;
};

/// 1 + mean over genes of ((g_i - t_i) / span_i)^2 for a fixed valid target
/// genome t, so the optimum is exactly 1 at g = t. Ignores data and seed.
class SurrogateEvaluator : public FitnessEvaluator {
 public:
  explicit SurrogateEvaluator(GeneSpace space = GeneSpace::Default());
  double evaluate(const Genome& g, const FitnessData& data,
                  std::uint64_t seed) const override;
  static Genome target();
  static constexpr double kOptimum = 1.0;

 private:
  GeneSpace space_;
};

/// Scores `ind` in place. Non-finite losses and numeric failures mark the
/// individual failed with fitness +inf.
void evaluate_individual(Individual& ind, const FitnessEvaluator& ev,
                         const FitnessData& data);

/// Evaluates every unevaluated member, `jobs` at a time. Seeds must be set.
void evaluate_all(std::span<Individual> members, const FitnessEvaluator& ev,
                  const FitnessData& data, int jobs);

/// Roulette weights (max - loss_i) + delta over finite losses, with
/// delta = 1e-6 * (max - min + 1). Failed individuals get delta.
std::vector<double> roulette_weights(std::span<const Individual> pop);
std::pair<std::size_t, std::size_t> roulette_select(std::span<const Individual> pop,
                                                    Rng& rng);

/// Best S of parents + offspring by (fitness, genome text).
Population environmental_select(std::span<const Individual> parents,
                                std::span<const Individual> offspring, int size);

struct GenerationStats {
  int generation = 0;
  double best_loss = 0.0;
  double mean_loss = 0.0;  // over finite losses
  int failed = 0;
  int evaluations = 0;
};

struct PhaseResult {
  Population start;
  Population final;
  std::vector<GenerationStats> log;
  int evaluations = 0;
};

/// Random initial population, then rough_generations rounds of roulette,
/// crossover, mutation and environmental selection.
PhaseResult rough_search(const SearchConfig& cfg, const GeneSpace& space,
                         const FitnessData& mixed, const FitnessEvaluator& ev);

/// Starts from the best S/2 of `rough` (re-evaluated on `data`) plus S/2
/// fresh random genomes. `subset` keys the seed streams.
PhaseResult transfer_search(const SearchConfig& cfg, const GeneSpace& space,
                            const Population& rough, const FitnessData& data,
                            const FitnessEvaluator& ev, int subset);

/// Best of `budget` independent random genomes, evaluated like a search.
Individual random_search(const SearchConfig& cfg, const GeneSpace& space,
                         const FitnessData& data, const FitnessEvaluator& ev,
                         int budget);

/// Seeded sample of `fraction` of each subset's train and valid windows,
/// at least one window each.
FitnessData mix_datasets(std::span<const FitnessData> subsets, double fraction,
                         std::uint64_t seed);

struct SearchReport {
  PhaseResult rough;
  std::vector<PhaseResult> transfer;
  std::vector<Individual> best;  // one per subset
  nlohmann::json timings;        // wall-clock seconds, excluded from payload
  nlohmann::json to_json(const SearchConfig& cfg) const;
};

/// Rough search on the mixed data, then one transfer search per subset.
SearchReport run_search(const SearchConfig& cfg, const GeneSpace& space,
                        std::span<const FitnessData> subsets,
                        const FitnessEvaluator& ev);

nlohmann::json stats_to_json(std::span<const GenerationStats> log);

}  // namespace fusenas

#endif  // FUSENAS_SEARCH_HPP_
