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

#ifndef FUSENAS_SIGNAL_HPP_
#define FUSENAS_SIGNAL_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "fusenas/dataset.hpp"

namespace fusenas {

inline constexpr double kSampleRate = 2000.0;
inline constexpr int kWindowLength = 400;  // 200 ms
inline constexpr int kWindowStride = 20;   // 10 ms
inline constexpr double kFeatureEpsilon = 1e-4;

/// A contiguous run of one gesture (or rest) from one trial. data holds
/// one row per channel, emg_0..emg_11 then acc_0..acc_35, at 2 kHz.
struct Segment {
  Mat data;
  int stimulus = 0;  // 0 = rest, gestures are 1..num_classes
  int repetition = 0;
  int subject = 0;

  Eigen::Index length() const { return data.cols(); }
  bool is_rest() const { return stimulus == 0; }
  int label() const { return stimulus - 1; }
};

/// Linear interpolation onto the 2 kHz grid. Output length is
/// ceil(duration * 2000) with duration = size / native_rate.
std::vector<double> resample_to_2khz(std::span<const double> series,
                                     double native_rate);

/// Drops floor(fraction * length) samples from each end.
Segment trim_boundaries(const Segment& seg, double fraction = 0.10);

struct NormStats {
  Eigen::VectorXd mean;
  Eigen::VectorXd stddev;  // population std, zeros replaced by 1
};

NormStats fit_norm(std::span<const Segment> train);
Segment apply_norm(const NormStats& stats, const Segment& seg);

/// A view of `length` samples of every channel starting at `start`. The
/// segment must outlive the window.
struct Window {
  const Segment* segment = nullptr;
  Eigen::Index start = 0;
  int length = kWindowLength;

  auto samples() const {
    return segment->data.block(0, start, segment->data.rows(), length);
  }
  int label() const { return segment->label(); }
  int repetition() const { return segment->repetition; }
};

/// floor((n - length) / stride) + 1, or 0 when n < length.
Eigen::Index window_count(Eigen::Index n, int length = kWindowLength,
                          int stride = kWindowStride);

std::vector<Window> slide_windows(const Segment& seg, int length = kWindowLength,
                                  int stride = kWindowStride);

/// Feature maps of one 48-channel window. Rows of the sEMG map are IEMG,
/// WL, VAR, ZC, SSC, WAMP; the ACC 6x36 map (MEAN, VAR, RMS, WL, MAV, MAVS)
/// is reshaped row-major into 18x12.
FeatureStreams extract_features(const Eigen::Ref<const Mat>& x,
                                double eps = kFeatureEpsilon);
FeatureStreams extract_features(const Window& w, double eps = kFeatureEpsilon);

/// 18x12 back to the 6x36 feature-by-channel layout.
Mat unreshape_acc(const Mat& acc18x12);

/// One example per window. Ids are first_id, first_id + 1, ...
Dataset assemble_streams(std::span<const Window> windows, int subset,
                         std::uint64_t first_id = 0, double eps = kFeatureEpsilon);

/// Per-cell z-score of the sEMG and ACC maps, fitted on training examples.
/// Raw IEMG and WL grow with the window length and reach the hundreds.
struct FeatureScaler {
  FeatureStreams mean;
  FeatureStreams stddev;  // zeros replaced by 1
};

FeatureScaler fit_feature_scaler(std::span<const Example> train);
/// Scales semg and acc in place and rebuilds fused from them.
void apply_feature_scaler(const FeatureScaler& s, Dataset& data);

struct PreprocessConfig {
  double trim_fraction = 0.10;
  int window_length = kWindowLength;
  int window_stride = kWindowStride;
  double eps = kFeatureEpsilon;
  bool standardize_features = true;
};

struct PreparedData {
  Dataset train;
  Dataset test;
  NormStats norm;
};

/// Trims the training segments, fits normalization on them, applies it to
/// both splits and turns every window into an example. Test segments are
/// not trimmed. Rest segments must already be removed. With
/// standardize_features the feature maps are then z-scored with a scaler
/// fitted on the training examples.
PreparedData preprocess(std::span<const Segment> train,
                        std::span<const Segment> test, const PreprocessConfig& cfg,
                        int subset, std::uint64_t first_id = 0);

/// Versioned binary feature cache. meta is stored verbatim in the header.
void write_feature_cache(const std::filesystem::path& path, const Dataset& data,
                         const nlohmann::json& meta);
Dataset read_feature_cache(const std::filesystem::path& path,
                           nlohmann::json* meta = nullptr);

}  // namespace fusenas

#endif  // FUSENAS_SIGNAL_HPP_
