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

// Configuration and the pipeline stages behind the command-line tool.
// Every stage reads and writes artifacts under cfg.output_dir:
//
//   data/subset_K.rec            recordings (synth)
//   features/subset_K_{train,test}.feat
//   search/report.json, search/genomes.txt
//   train/subset_K.ckpt, train/subset_K_history.json
//   eval/subset_K.json

#ifndef FUSENAS_EXPERIMENT_HPP_
#define FUSENAS_EXPERIMENT_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fusenas/data.hpp"
#include "fusenas/genome.hpp"
#include "fusenas/net/trainer.hpp"
#include "fusenas/search.hpp"
#include "fusenas/signal.hpp"

namespace fusenas {

struct ExperimentConfig {
  std::uint64_t seed = 1;  // master seed, copied into search/train/fine-tune
  std::filesystem::path output_dir = "fusenas_out";
  std::vector<std::filesystem::path> datasets;  // CSV files; empty = synthetic
  SyntheticSpec synthetic;
  int synthetic_subsets = 3;
  std::array<int, kNumCandidateFilters> candidate_filters =
      GeneSpace::Default().candidate_filters;
  SplitSpec split;
  // Training repetitions held out as validation data for fitness.
  std::vector<int> search_valid_repetitions{6};
  PreprocessConfig preprocess;
  SearchConfig search;
  net::TrainConfig train;
  net::FineTuneConfig fine_tune;

  int subset_count() const;
  GeneSpace gene_space() const;
  /// Pushes the master seed into the nested sections.
  void propagate_seed();
  /// Throws ConfigError.
  void validate() const;
};

/// Everything that can change a result; output_dir and jobs are left out.
nlohmann::json config_to_json(const ExperimentConfig& c);
/// Strict: unknown keys and wrong types raise ConfigError. Missing keys
/// keep the values already in `base`.
ExperimentConfig config_from_json(const nlohmann::json& j, ExperimentConfig base = {});
ExperimentConfig load_config(const std::filesystem::path& path);

/// FNV-1a 64 of the canonical JSON dump, as 16 hex digits.
std::string config_hash(const ExperimentConfig& c);

/// config_hash, seed and the config echo, merged into every JSON artifact.
nlohmann::json provenance(const ExperimentConfig& c);

std::filesystem::path artifact(const ExperimentConfig& c, const std::string& rel);
std::string subset_name(int k);

/// Writes data/subset_K.rec (and .csv when `csv`). Returns the paths.
std::vector<std::filesystem::path> run_synth(const ExperimentConfig& c, bool csv = false);

/// Loads recordings, splits by trial, preprocesses and writes the feature
/// caches. Returns per-subset window counts.
nlohmann::json run_features(const ExperimentConfig& c);

/// Fitness data for subset k: training windows minus the held-out
/// repetitions, which become validation windows.
FitnessData load_fitness_data(const ExperimentConfig& c, int k);

/// Runs the search and writes search/report.json and search/genomes.txt.
nlohmann::json run_search_stage(const ExperimentConfig& c);

/// Best genome of subset k from search/genomes.txt.
Genome searched_genome(const ExperimentConfig& c, int k);

/// Trains `genome` (default: the searched one) on all training windows of
/// subset k and writes the checkpoint and history.
nlohmann::json run_train(const ExperimentConfig& c, int k,
                         std::optional<Genome> genome = std::nullopt);

/// Test accuracy of the subset k checkpoint, optionally after fine-tuning
/// on an adaptation share of the test windows.
nlohmann::json run_eval(const ExperimentConfig& c, int k, bool fine_tune);

/// Reads the JSON artifacts and renders an aligned plain-text table.
std::string run_report(const ExperimentConfig& c);

}  // namespace fusenas

#endif  // FUSENAS_EXPERIMENT_HPP_
