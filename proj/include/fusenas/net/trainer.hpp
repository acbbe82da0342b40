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

#ifndef FUSENAS_NET_TRAINER_HPP_
#define FUSENAS_NET_TRAINER_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "fusenas/dataset.hpp"
#include "fusenas/net/network.hpp"

namespace fusenas::net {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam with bias correction. One instance per network.
class Adam {
 public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}
  void step(std::span<Param* const> params, double lr);
  long steps() const { return t_; }

 private:
  AdamConfig cfg_;
  long t_ = 0;
};

struct TrainConfig {
  int epochs = 25;
  double learning_rate = 0.001;
  // The rate is divided by decay_factor once each listed epoch has ended.
  std::vector<int> decay_epochs = {12, 20};
  double decay_factor = 10.0;
  int batch_size = 32;
  std::uint64_t seed = 1;

  /// Throws ConfigError.
  void validate() const;
};

/// Learning rate in effect during 1-based epoch: 0.001 for 1-12, 1e-4 for
/// 13-20, 1e-5 for 21-25 with the defaults.
double lr_at_epoch(const TrainConfig& cfg, int epoch);

/// One Adam step on a labeled batch; returns its mean cross-entropy.
/// Throws NumericError on a non-finite loss.
double train_step(Network& net, Adam& opt, std::span<const Example* const> batch,
                  double lr);

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double valid_loss = 0.0;  // NaN when no validation set was given
  double lr = 0.0;
};

using History = std::vector<EpochRecord>;

/// Shuffled mini-batch training; deterministic for a fixed seed.
History train(Network& net, std::span<const Example> train_set,
              std::span<const Example> valid_set, const TrainConfig& cfg);

/// Mean cross-entropy over a dataset.
double mean_loss(Network& net, std::span<const Example> data);

std::vector<int> predict(Network& net, std::span<const Example> data);

/// 100 * correct / total. Throws DataError on empty input or length
/// mismatch.
double accuracy_percent(std::span<const int> predicted,
                        std::span<const int> actual);

/// accuracy_percent of argmax predictions. Throws DataError when empty.
double evaluate_accuracy(Network& net, std::span<const Example> data);

/// Accuracy of always predicting the most frequent label.
double majority_baseline_percent(std::span<const Example> data);

/// Stratified split of test windows: per class, floor(fraction * count)
/// windows (seeded choice) go to the adaptation subset.
std::pair<Dataset, Dataset> adaptation_split(std::span<const Example> test,
                                             double fraction,
                                             std::uint64_t seed);

struct FineTuneConfig {
  double fraction = 0.1;
  int epochs = 3;
  double learning_rate = 0.0001;
  int batch_size = 32;
  std::uint64_t seed = 1;
};

/// Continues Adam training at a fixed rate on the adaptation subset.
/// Throws DataError if any adaptation id also occurs in evaluation.
History fine_tune(Network& net, std::span<const Example> adaptation,
                  std::span<const Example> evaluation,
                  const FineTuneConfig& cfg);

nlohmann::json history_to_json(const History& h);

/// Binary checkpoint: magic "FNASCKPT", u32 version, JSON header, then
/// every parameter as (u64 rows, u64 cols, f64 row-major payload).
void save_checkpoint(const std::filesystem::path& path, Network& net,
                     const nlohmann::json& header);

struct Checkpoint {
  nlohmann::json header;
  std::vector<Mat> params;
};

/// Throws DataError on a missing file, bad magic or unsupported version.
Checkpoint read_checkpoint(const std::filesystem::path& path);

}  // namespace fusenas::net

#endif  // FUSENAS_NET_TRAINER_HPP_
