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

#ifndef FUSENAS_DATA_HPP_
#define FUSENAS_DATA_HPP_

#include <cstdint>
#include <filesystem>
#include <vector>

#include <json.hpp>

#include "fusenas/signal.hpp"

namespace fusenas {

/// Recordings of one subject in file order, rest segments included.
struct RecordingSet {
  std::vector<Segment> segments;
  int num_classes = 0;  // gestures, rest not counted
};

struct SplitSpec {
  std::vector<int> train{1, 3, 4, 6};
  std::vector<int> test{2, 5};

  /// Disjoint subsets of 1..6, both non-empty. Throws ConfigError.
  void validate() const;
};

struct Split {
  std::vector<Segment> train;
  std::vector<Segment> test;
};

/// Reads `sample,emg_0..emg_11,acc_0..acc_35,stimulus,repetition` rows at
/// 2 kHz. Columns may come in any order; extra columns are ignored.
RecordingSet ingest_csv(const std::filesystem::path& path, int subject = 0);

/// Writes the schema above with shortest round-trip number formatting, so
/// ingest_csv recovers every sample bit-exactly.
void export_csv(const RecordingSet& rs, const std::filesystem::path& path);

/// Gesture segments by repetition id. Rest and repetitions named in
/// neither list are dropped.
Split split_by_trials(const RecordingSet& rs, const SplitSpec& spec = {});

struct SyntheticSpec {
  int num_classes = 5;
  int repetitions = 6;
  int segment_samples = 10000;  // 5 s at 2 kHz
  int rest_samples = 1000;
  double noise = 0.5;
  std::uint64_t seed = 1;
  int subject = 0;

  void validate() const;
};

void to_json(nlohmann::json& j, const SyntheticSpec& s);
void from_json(const nlohmann::json& j, SyntheticSpec& s);

/// Class c drives channel k with a * sin(2 pi f t + phi) plus Gaussian
/// noise; (a, f, phi) are drawn once per class and channel. ACC channels
/// are generated at 148 Hz and resampled. Each gesture is preceded by a
/// rest segment of pure noise.
RecordingSet synthesize(const SyntheticSpec& spec);

inline constexpr double kAccNativeRate = 148.0;

void write_recordings(const std::filesystem::path& path, const RecordingSet& rs,
                      const nlohmann::json& meta);
RecordingSet read_recordings(const std::filesystem::path& path,
                             nlohmann::json* meta = nullptr);

}  // namespace fusenas

#endif  // FUSENAS_DATA_HPP_
