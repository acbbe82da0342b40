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

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <vector>

#include "feature_oracle.hpp"
#include "fusenas/error.hpp"
#include "fusenas/signal.hpp"

using namespace fusenas;

namespace {

Segment make_segment(Eigen::Index n, int stimulus, int rep, std::mt19937_64& rng,
                     double shift = 0.0, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, 1.0);
  Segment s;
  s.stimulus = stimulus;
  s.repetition = rep;
  s.data.resize(kTotalChannels, n);
  for (Eigen::Index i = 0; i < s.data.size(); ++i) s.data.data()[i] = shift + scale * g(rng);
  return s;
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("fusenas_signal_" + name);
}

}  // namespace

TEST_CASE("resampling onto the 2 kHz grid") {
  std::vector<double> x(100);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::sin(0.1 * static_cast<double>(i));
  CHECK(resample_to_2khz(x, 2000.0) == x);

  const std::vector<double> c(37, 4.25);
  for (double v : resample_to_2khz(c, 148.0)) CHECK(v == 4.25);

  // 148 samples at 148 Hz span one second.
  std::vector<double> ramp(148);
  for (std::size_t i = 0; i < ramp.size(); ++i) ramp[i] = static_cast<double>(i) / 147.0;
  const auto y = resample_to_2khz(ramp, 148.0);
  REQUIRE(y.size() == 2000);
  double worst = 0;
  for (std::size_t j = 0; j < y.size(); ++j) {
    const double expect = std::min(1.0, static_cast<double>(j) * 148.0 / 2000.0 / 147.0);
    worst = std::max(worst, std::abs(y[j] - expect));
  }
  CHECK(worst < 1e-12);
  CHECK(y.front() == 0.0);
  CHECK(y.back() == 1.0);

  CHECK(resample_to_2khz(std::vector<double>(3, 1.0), 148.0).size() == 41);  // ceil(40.54)
  CHECK_THROWS_AS(resample_to_2khz(std::vector<double>{}, 148.0), DataError);
  CHECK_THROWS_AS(resample_to_2khz(x, 4000.0), ConfigError);
}

TEST_CASE("boundary trimming") {
  std::mt19937_64 rng(1);
  const Segment s = make_segment(10000, 3, 1, rng);
  const Segment t = trim_boundaries(s);
  CHECK(t.length() == 8000);
  CHECK(t.data(5, 0) == s.data(5, 1000));
  CHECK(t.data(7, 7999) == s.data(7, 8999));
  CHECK(t.stimulus == 3);

  CHECK(trim_boundaries(s, 0.0).data == s.data);
  CHECK(trim_boundaries(make_segment(10, 1, 1, rng)).length() == 8);
  CHECK(trim_boundaries(make_segment(9, 1, 1, rng)).length() == 9);  // floor(0.9) = 0
  CHECK_THROWS_AS(trim_boundaries(make_segment(2, 1, 1, rng), 0.5), DataError);
  CHECK_THROWS_AS(trim_boundaries(s, -0.1), ConfigError);
}

TEST_CASE("normalization") {
  std::mt19937_64 rng(2);
  std::vector<Segment> train = {make_segment(500, 1, 1, rng, 3.0, 2.0),
                                make_segment(700, 2, 3, rng, 3.0, 2.0)};
  train[0].data.row(4).setConstant(7.0);
  train[1].data.row(4).setConstant(7.0);
  const NormStats st = fit_norm(train);
  CHECK(st.stddev(4) == 1.0);

  Eigen::VectorXd sum = Eigen::VectorXd::Zero(kTotalChannels);
  Eigen::VectorXd sq = Eigen::VectorXd::Zero(kTotalChannels);
  double n = 0;
  for (const Segment& s : train) {
    const Segment z = apply_norm(st, s);
    sum += z.data.rowwise().sum();
    sq += z.data.rowwise().squaredNorm();
    n += z.length();
    CHECK(z.data.row(4).isZero(0.0));
  }
  for (int c = 0; c < kTotalChannels; ++c) {
    CHECK(std::abs(sum(c) / n) < 1e-9);
    if (c != 4) CHECK(std::abs(std::sqrt(sq(c) / n) - 1.0) < 1e-9);
  }

  // Test data is scaled with the training statistics: a shift of +10 shows
  // up as a mean of about 5 after dividing by the training std of 2.
  const Segment test = apply_norm(st, make_segment(4000, 1, 2, rng, 13.0, 2.0));
  CHECK(test.data.row(0).mean() == doctest::Approx(5.0).epsilon(0.05));

  CHECK_THROWS_AS(fit_norm(std::vector<Segment>{}), DataError);
}

TEST_CASE("window count law") {
  CHECK(window_count(10000) == 481);
  CHECK(window_count(400) == 1);
  CHECK(window_count(399) == 0);
  CHECK(window_count(401) == 1);
  CHECK(window_count(420) == 2);
  for (int length : {1, 7, 400}) {
    for (int stride : {1, 3, 20}) {
      for (Eigen::Index n = 0; n < 1200; n += 13) {
        Eigen::Index brute = 0;
        for (Eigen::Index start = 0; start + length <= n; start += stride) ++brute;
        REQUIRE(window_count(n, length, stride) == brute);
      }
    }
  }

  std::mt19937_64 rng(3);
  const Segment s = make_segment(1000, 4, 6, rng);
  const auto w = slide_windows(s);
  REQUIRE(w.size() == 31);
  for (const Window& x : w) {
    CHECK(x.start + x.length <= s.length());
    CHECK(x.label() == 3);
    CHECK(x.repetition() == 6);
  }
  CHECK(w[1].start == 20);
  CHECK(slide_windows(make_segment(399, 1, 1, rng)).empty());
}

TEST_CASE("features by hand") {
  Mat zero = Mat::Zero(48, 400);
  const FeatureStreams z = extract_features(zero);
  CHECK(z.semg.isZero(0.0));
  CHECK(z.acc.isZero(0.0));
  CHECK(z.fused.isZero(0.0));

  Mat x = Mat::Zero(48, 4);
  x.row(0) << 1, -2, 3, -4;
  x.row(12) << 1, -2, 3, -4;
  const FeatureStreams f = extract_features(x, 0.0);
  CHECK(f.semg(0, 0) == 10.0);  // IEMG
  CHECK(f.semg(1, 0) == 15.0);  // WL
  CHECK(f.semg(3, 0) == 3.0);   // ZC
  CHECK(f.semg(4, 0) == 2.0);   // SSC
  CHECK(f.semg(5, 0) == 3.0);   // WAMP
  CHECK(f.semg(2, 0) == doctest::Approx(29.0 / 3.0));  // deviations 1.5, 1.5, 3.5, 3.5
  CHECK(f.acc(0, 0) == -0.5);    // MEAN
  CHECK(f.acc(12, 0) == 2.5);    // MAV, row 4 * 3
  CHECK(f.acc(15, 0) == 2.0);    // MAVS = 3.5 - 1.5
  CHECK(f.acc(6, 0) == doctest::Approx(std::sqrt(7.5)));  // RMS

  CHECK_THROWS_AS(extract_features(Mat::Zero(47, 400)), DataError);
  CHECK_THROWS_AS(extract_features(Mat::Zero(48, 1)), DataError);
}

TEST_CASE("features match the reference implementation") {
  std::mt19937_64 rng(4);
  double worst = 0;
  for (int k = 0; k < 1000; ++k) {
    const Mat x = testing::random_window(400, rng);
    const FeatureStreams f = extract_features(x);
    REQUIRE(f.semg.rows() == 6);
    REQUIRE(f.semg.cols() == 12);
    REQUIRE(f.acc.rows() == 18);
    REQUIRE(f.acc.cols() == 12);
    REQUIRE(f.fused.rows() == 24);
    REQUIRE(f.fused.cols() == 12);
    const testing::OracleMaps o = testing::oracle_features(x, 1e-4);
    worst = std::max(worst, testing::max_relative_error(f.semg, o.semg));
    worst = std::max(worst, testing::max_relative_error(unreshape_acc(f.acc), o.acc));
    for (int r = 0; r < 18; ++r) {
      for (int c = 0; c < 12; ++c) REQUIRE(f.acc(r, c) == unreshape_acc(f.acc)(r / 3, (r % 3) * 12 + c));
    }
    REQUIRE(f.fused.topRows(6) == f.semg);
    REQUIRE(f.fused.bottomRows(18) == f.acc);
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("feature properties") {
  std::mt19937_64 rng(5);
  for (int k = 0; k < 50; ++k) {
    const Mat x = testing::random_window(400, rng);
    const FeatureStreams f = extract_features(x, 0.0);
    CHECK(f.fused.allFinite());
    CHECK((f.semg.array() >= 0).all());
    const Mat a = unreshape_acc(f.acc);
    for (int r : {1, 2, 3, 4}) CHECK((a.row(r).array() >= 0).all());

    const double c = 3.5;
    const FeatureStreams g = extract_features(c * x, 0.0);
    const Mat b = unreshape_acc(g.acc);
    for (int r : {0, 1}) {  // IEMG, WL
      CHECK(testing::max_relative_error(g.semg.row(r), c * f.semg.row(r)) < 1e-12);
    }
    CHECK(testing::max_relative_error(g.semg.row(2), c * c * f.semg.row(2)) < 1e-12);
    CHECK(g.semg.row(3) == f.semg.row(3));  // ZC
    for (int r : {0, 2, 3, 4, 5}) {  // MEAN, RMS, WL, MAV, MAVS
      CHECK(testing::max_relative_error(b.row(r), c * a.row(r)) < 1e-9);
    }
    CHECK(testing::max_relative_error(b.row(1), c * c * a.row(1)) < 1e-12);
  }

  // Reshape is a bijection.
  Mat m(6, 36);
  for (int i = 0; i < m.size(); ++i) m.data()[i] = i;
  Mat r = Eigen::Map<Mat>(m.data(), 18, 12);
  CHECK(unreshape_acc(r) == m);
}

TEST_CASE("stream assembly and preprocessing") {
  std::mt19937_64 rng(6);
  const Segment s = make_segment(800, 2, 3, rng);
  const auto w = slide_windows(s);
  const Dataset d = assemble_streams(w, 1, 100);
  REQUIRE(d.size() == w.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    CHECK(d[i].label == 1);
    CHECK(d[i].repetition == 3);
    CHECK(d[i].subset == 1);
    CHECK(d[i].id == 100 + i);
    CHECK(d[i].streams.fused.topRows(6) == d[i].streams.semg);
  }

  const std::vector<Segment> train = {make_segment(1000, 1, 1, rng),
                                      make_segment(1000, 2, 1, rng)};
  const std::vector<Segment> test = {make_segment(1000, 1, 2, rng)};
  const PreparedData p = preprocess(train, test, {}, 0);
  CHECK(p.train.size() == 2 * window_count(800));  // 100 trimmed per end
  CHECK(p.test.size() == window_count(1000));      // test is not trimmed
  CHECK(p.test.front().id == p.train.back().id + 1);

  std::vector<Segment> with_rest = train;
  with_rest.push_back(make_segment(1000, 0, 0, rng));
  CHECK_THROWS_AS(preprocess(with_rest, test, {}, 0), DataError);
}

TEST_CASE("feature cache") {
  std::mt19937_64 rng(7);
  const Segment s = make_segment(600, 5, 4, rng);
  const auto w = slide_windows(s);
  const Dataset d = assemble_streams(w, 2, 9);
  const auto path = temp_path("cache.bin");
  write_feature_cache(path, d, {{"subset", 2}});
  nlohmann::json meta;
  const Dataset back = read_feature_cache(path, &meta);
  CHECK(meta["subset"] == 2);
  REQUIRE(back.size() == d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    CHECK(back[i].streams.fused == d[i].streams.fused);
    CHECK(back[i].label == d[i].label);
    CHECK(back[i].id == d[i].id);
    CHECK(back[i].repetition == 4);
  }

  const auto size = std::filesystem::file_size(path);
  std::filesystem::resize_file(path, size - 8);
  CHECK_THROWS_AS(read_feature_cache(path), DataError);
  {
    std::ofstream bad(path, std::ios::binary | std::ios::trunc);
    bad << "NOTACACHE";
  }
  CHECK_THROWS_WITH_AS(read_feature_cache(path), doctest::Contains("bad magic"), DataError);
  std::filesystem::remove(path);
}
