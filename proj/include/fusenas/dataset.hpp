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

#ifndef FUSENAS_DATASET_HPP_
#define FUSENAS_DATASET_HPP_

#include <cstdint>
#include <vector>

#include <Eigen/Core>

namespace fusenas {

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr int kEmgChannels = 12;
inline constexpr int kAccChannels = 36;
inline constexpr int kTotalChannels = kEmgChannels + kAccChannels;
inline constexpr int kFeatureRows = 6;

/// The three network inputs of one window. fused = semg stacked on acc.
struct FeatureStreams {
  Mat semg = Mat::Zero(6, 12);
  Mat acc = Mat::Zero(18, 12);
  Mat fused = Mat::Zero(24, 12);
};

/// One labeled window. id is unique within a dataset and is used to prove
/// that adaptation and evaluation subsets are disjoint.
struct Example {
  FeatureStreams streams;
  int label = 0;       // 0-based gesture class
  int repetition = 0;  // source trial, 1..6
  int subset = 0;      // sub-dataset index
  std::uint64_t id = 0;
};

using Dataset = std::vector<Example>;

}  // namespace fusenas

#endif  // FUSENAS_DATASET_HPP_
