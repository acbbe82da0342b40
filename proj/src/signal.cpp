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

#include "fusenas/signal.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <string>

#include "binary_io.hpp"
#include "fusenas/error.hpp"

namespace fusenas {

std::vector<double> resample_to_2khz(std::span<const double> series,
                                     double native_rate) {
  if (series.empty()) throw DataError("cannot resample an empty series");
  if (!(native_rate > 0.0) || native_rate > kSampleRate) {
    throw ConfigError("native rate must be in (0, 2000] Hz, got " +
                      std::to_string(native_rate));
  }
  const auto n = static_cast<double>(series.size());
  // The tolerance keeps exact ratios (e.g. 148 samples at 148 Hz) from
  // rounding up by one sample.
  const auto out_len =
      static_cast<std::size_t>(std::ceil(n * kSampleRate / native_rate - 1e-9));
  std::vector<double> out(out_len);
  const std::size_t last = series.size() - 1;
  for (std::size_t j = 0; j < out_len; ++j) {
    const double pos = static_cast<double>(j) * native_rate / kSampleRate;
    const auto i = static_cast<std::size_t>(pos);
    if (i >= last) {
      out[j] = series[last];
      continue;
    }
    const double f = pos - static_cast<double>(i);
    out[j] = series[i] + f * (series[i + 1] - series[i]);
  }
  return out;
}

Segment trim_boundaries(const Segment& seg, double fraction) {
  if (!(fraction >= 0.0) || fraction >= 1.0) {
    throw ConfigError("trim fraction must be in [0, 1)");
  }
  const Eigen::Index n = seg.length();
  const auto cut = static_cast<Eigen::Index>(std::floor(fraction * static_cast<double>(n)));
  const Eigen::Index keep = n - 2 * cut;
  if (keep <= 0) {
    throw DataError("segment of " + std::to_string(n) +
                    " samples is empty after trimming");
  }
  Segment out;
  out.stimulus = seg.stimulus;
  out.repetition = seg.repetition;
  out.subject = seg.subject;
  out.data = seg.data.middleCols(cut, keep);
  return out;
}

NormStats fit_norm(std::span<const Segment> train) {
  if (train.empty()) throw DataError("cannot fit normalization on no data");
  const Eigen::Index ch = train.front().data.rows();
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(ch);
  double count = 0.0;
  for (const Segment& s : train) {
    if (s.data.rows() != ch) throw DataError("segments disagree on channel count");
    sum += s.data.rowwise().sum();
    count += static_cast<double>(s.length());
  }
  if (count == 0.0) throw DataError("cannot fit normalization on no samples");
  NormStats st;
  st.mean = sum / count;
  Eigen::VectorXd ss = Eigen::VectorXd::Zero(ch);
  for (const Segment& s : train) {
    ss += (s.data.colwise() - st.mean).rowwise().squaredNorm();
  }
  st.stddev = (ss / count).cwiseSqrt();
  for (Eigen::Index c = 0; c < ch; ++c) {
    if (!(st.stddev(c) > 0.0)) st.stddev(c) = 1.0;
  }
  return st;
}

Segment apply_norm(const NormStats& stats, const Segment& seg) {
  if (seg.data.rows() != stats.mean.size()) {
    throw DataError("normalization fitted on " + std::to_string(stats.mean.size()) +
                    " channels, segment has " + std::to_string(seg.data.rows()));
  }
  Segment out = seg;
  out.data = ((seg.data.colwise() - stats.mean).array().colwise() /
              stats.stddev.array())
                 .matrix();
  return out;
}

Eigen::Index window_count(Eigen::Index n, int length, int stride) {
  if (length < 1 || stride < 1) throw ConfigError("window length and stride must be >= 1");
  if (n < length) return 0;
  return (n - length) / stride + 1;
}

std::vector<Window> slide_windows(const Segment& seg, int length, int stride) {
  const Eigen::Index count = window_count(seg.length(), length, stride);
  std::vector<Window> out;
  out.reserve(static_cast<std::size_t>(count));
  for (Eigen::Index k = 0; k < count; ++k) {
    out.push_back(Window{&seg, k * stride, length});
  }
  return out;
}

namespace {

struct ChannelStats {
  double iemg = 0, wl = 0, var = 0, mean = 0, rms = 0, mav = 0, mavs = 0;
  double zc = 0, ssc = 0, wamp = 0;
};

ChannelStats channel_stats(const double* x, Eigen::Index n, double eps) {
  ChannelStats s;
  double sum = 0.0, sq = 0.0, abs_first = 0.0, abs_second = 0.0;
  const Eigen::Index half = n / 2;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double a = std::abs(x[i]);
    sum += x[i];
    sq += x[i] * x[i];
    (i < half ? abs_first : abs_second) += a;
    if (i + 1 < n) {
      const double d = x[i + 1] - x[i];
      s.wl += std::abs(d);
      if (std::abs(d) >= eps) {
        s.wamp += 1;
        if (x[i] * x[i + 1] < 0.0) s.zc += 1;
      }
    }
    if (i > 0 && i + 1 < n) {
      const double l = x[i] - x[i - 1];
      const double r = x[i] - x[i + 1];
      if (l * r > 0.0 && std::max(std::abs(l), std::abs(r)) >= eps) s.ssc += 1;
    }
  }
  s.iemg = abs_first + abs_second;
  s.mean = sum / static_cast<double>(n);
  s.mav = s.iemg / static_cast<double>(n);
  s.rms = std::sqrt(sq / static_cast<double>(n));
  double dev = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) dev += (x[i] - s.mean) * (x[i] - s.mean);
  s.var = n > 1 ? dev / static_cast<double>(n - 1) : 0.0;
  const double mav_first = half > 0 ? abs_first / static_cast<double>(half) : 0.0;
  s.mavs = abs_second / static_cast<double>(n - half) - mav_first;
  return s;
}

}  // namespace

FeatureStreams extract_features(const Eigen::Ref<const Mat>& x, double eps) {
  if (x.rows() != kTotalChannels) {
    throw DataError("window has " + std::to_string(x.rows()) + " channels, expected " +
                    std::to_string(kTotalChannels));
  }
  if (x.cols() < 2) throw DataError("window needs at least 2 samples");
  const Eigen::Index n = x.cols();
  // Copy each channel so that the scan runs over contiguous memory.
  std::vector<double> buf(static_cast<std::size_t>(n));
  FeatureStreams f;
  for (int c = 0; c < kTotalChannels; ++c) {
    for (Eigen::Index i = 0; i < n; ++i) buf[static_cast<std::size_t>(i)] = x(c, i);
    const ChannelStats s = channel_stats(buf.data(), n, eps);
    if (c < kEmgChannels) {
      const double v[6] = {s.iemg, s.wl, s.var, s.zc, s.ssc, s.wamp};
      for (int r = 0; r < 6; ++r) f.semg(r, c) = v[r];
    } else {
      const int a = c - kEmgChannels;
      const double v[6] = {s.mean, s.var, s.rms, s.wl, s.mav, s.mavs};
      for (int r = 0; r < 6; ++r) f.acc(r * 3 + a / 12, a % 12) = v[r];
    }
  }
  f.fused.topRows(6) = f.semg;
  f.fused.bottomRows(18) = f.acc;
  return f;
}

FeatureStreams extract_features(const Window& w, double eps) {
  return extract_features(w.samples(), eps);
}

Mat unreshape_acc(const Mat& acc) {
  if (acc.rows() != 18 || acc.cols() != 12) throw DataError("expected an 18x12 map");
  return Eigen::Map<const Mat>(acc.data(), 6, 36);
}

Dataset assemble_streams(std::span<const Window> windows, int subset,
                         std::uint64_t first_id, double eps) {
  Dataset out;
  out.reserve(windows.size());
  for (const Window& w : windows) {
    Example e;
    e.streams = extract_features(w, eps);
    e.label = w.label();
    e.repetition = w.repetition();
    e.subset = subset;
    e.id = first_id++;
    out.push_back(std::move(e));
  }
  return out;
}

PreparedData preprocess(std::span<const Segment> train, std::span<const Segment> test,
                        const PreprocessConfig& cfg, int subset,
                        std::uint64_t first_id) {
  std::vector<Segment> trimmed;
  trimmed.reserve(train.size());
  for (const Segment& s : train) {
    if (s.is_rest()) throw DataError("rest segments cannot be classification targets");
    trimmed.push_back(trim_boundaries(s, cfg.trim_fraction));
  }
  PreparedData out;
  out.norm = fit_norm(trimmed);

  auto build = [&](std::span<const Segment> segs, Dataset& dst) {
    for (const Segment& raw : segs) {
      if (raw.is_rest()) throw DataError("rest segments cannot be classification targets");
      const Segment s = apply_norm(out.norm, raw);
      const auto windows = slide_windows(s, cfg.window_length, cfg.window_stride);
      Dataset part = assemble_streams(windows, subset, first_id, cfg.eps);
      first_id += part.size();
      std::move(part.begin(), part.end(), std::back_inserter(dst));
    }
  };
  build(trimmed, out.train);
  build(test, out.test);
  if (cfg.standardize_features) {
    const FeatureScaler sc = fit_feature_scaler(out.train);
    apply_feature_scaler(sc, out.train);
    apply_feature_scaler(sc, out.test);
  }
  return out;
}

FeatureScaler fit_feature_scaler(std::span<const Example> train) {
  if (train.empty()) throw DataError("cannot fit feature scaling on no examples");
  FeatureScaler s;
  const double n = static_cast<double>(train.size());
  for (const Example& e : train) {
    s.mean.semg += e.streams.semg;
    s.mean.acc += e.streams.acc;
  }
  s.mean.semg /= n;
  s.mean.acc /= n;
  Mat vs = Mat::Zero(6, 12), va = Mat::Zero(18, 12);
  for (const Example& e : train) {
    vs += (e.streams.semg - s.mean.semg).cwiseAbs2();
    va += (e.streams.acc - s.mean.acc).cwiseAbs2();
  }
  s.stddev.semg = (vs / n).cwiseSqrt();
  s.stddev.acc = (va / n).cwiseSqrt();
  for (Mat* m : {&s.stddev.semg, &s.stddev.acc}) {
    for (Eigen::Index i = 0; i < m->size(); ++i) {
      if (!(m->data()[i] > 0.0)) m->data()[i] = 1.0;
    }
  }
  return s;
}

void apply_feature_scaler(const FeatureScaler& s, Dataset& data) {
  for (Example& e : data) {
    e.streams.semg = (e.streams.semg - s.mean.semg).cwiseQuotient(s.stddev.semg);
    e.streams.acc = (e.streams.acc - s.mean.acc).cwiseQuotient(s.stddev.acc);
    e.streams.fused.topRows(6) = e.streams.semg;
    e.streams.fused.bottomRows(18) = e.streams.acc;
  }
}

namespace {
constexpr char kFeatureMagic[] = "FNASFEAT";
constexpr std::uint32_t kFeatureVersion = 1;
}  // namespace

void write_feature_cache(const std::filesystem::path& path, const Dataset& data,
                         const nlohmann::json& meta) {
  io::Writer w(path);
  w.header(kFeatureMagic, kFeatureVersion, meta);
  w.pod(static_cast<std::uint64_t>(data.size()));
  for (const Example& e : data) {
    w.pod(static_cast<std::int32_t>(e.label));
    w.pod(static_cast<std::int32_t>(e.repetition));
    w.pod(static_cast<std::int32_t>(e.subset));
    w.pod(e.id);
    w.matrix(e.streams.semg);
    w.matrix(e.streams.acc);
  }
  w.close();
}

Dataset read_feature_cache(const std::filesystem::path& path, nlohmann::json* meta) {
  io::Reader r(path);
  nlohmann::json header = r.header(kFeatureMagic, kFeatureVersion);
  if (meta) *meta = std::move(header);
  const auto count = r.pod<std::uint64_t>();
  Dataset out;
  out.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(count, 1u << 20)));
  for (std::uint64_t k = 0; k < count; ++k) {
    Example e;
    e.label = r.pod<std::int32_t>();
    e.repetition = r.pod<std::int32_t>();
    e.subset = r.pod<std::int32_t>();
    e.id = r.pod<std::uint64_t>();
    e.streams.semg = r.matrix();
    e.streams.acc = r.matrix();
    if (e.streams.semg.rows() != 6 || e.streams.semg.cols() != 12 ||
        e.streams.acc.rows() != 18 || e.streams.acc.cols() != 12) {
      throw DataError(path.string() + ": record " + std::to_string(k) +
                      " has wrong feature map shapes");
    }
    e.streams.fused.topRows(6) = e.streams.semg;
    e.streams.fused.bottomRows(18) = e.streams.acc;
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace fusenas
