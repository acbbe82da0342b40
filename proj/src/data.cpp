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

#include "fusenas/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <string_view>

#include "binary_io.hpp"
#include "fusenas/error.hpp"
#include "fusenas/genome.hpp"
#include "fusenas/seed.hpp"

namespace fusenas {

void SplitSpec::validate() const {
  if (train.empty() || test.empty()) throw ConfigError("split needs train and test repetitions");
  std::set<int> seen;
  for (const auto* list : {&train, &test}) {
    for (int r : *list) {
      if (r < 1 || r > 6) throw ConfigError("repetition " + std::to_string(r) + " outside 1..6");
      if (!seen.insert(r).second) {
        throw ConfigError("repetition " + std::to_string(r) + " listed twice in split");
      }
    }
  }
}

namespace {

std::vector<std::string> expected_columns() {
  std::vector<std::string> cols{"sample"};
  for (int i = 0; i < kEmgChannels; ++i) cols.push_back("emg_" + std::to_string(i));
  for (int i = 0; i < kAccChannels; ++i) cols.push_back("acc_" + std::to_string(i));
  cols.push_back("stimulus");
  cols.push_back("repetition");
  return cols;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t comma = line.find(',', pos);
    out.push_back(line.substr(pos, comma == std::string_view::npos ? comma : comma - pos));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

double parse_number(std::string_view field, std::size_t line, std::string_view column) {
  double v = 0.0;
  const char* end = field.data() + field.size();
  auto [p, ec] = std::from_chars(field.data(), end, v);
  if (ec != std::errc() || p != end || field.empty() || !std::isfinite(v)) {
    throw DataError("line " + std::to_string(line) + ", column " + std::string(column) +
                    ": non-numeric value '" + std::string(field) + "'");
  }
  return v;
}

int parse_int(std::string_view field, std::size_t line, std::string_view column) {
  const double v = parse_number(field, line, column);
  if (v != std::floor(v) || std::abs(v) > 1e9) {
    throw DataError("line " + std::to_string(line) + ", column " + std::string(column) +
                    ": expected an integer, got '" + std::string(field) + "'");
  }
  return static_cast<int>(v);
}

Segment finish_segment(std::vector<double>& rows, int stimulus, int repetition,
                       int subject) {
  Segment s;
  s.stimulus = stimulus;
  s.repetition = repetition;
  s.subject = subject;
  const auto n = static_cast<Eigen::Index>(rows.size() / kTotalChannels);
  s.data = Eigen::Map<const Mat>(rows.data(), n, kTotalChannels).transpose();
  rows.clear();
  return s;
}

}  // namespace

RecordingSet ingest_csv(const std::filesystem::path& path, int subject) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();

  std::size_t pos = 0, line_no = 0;
  auto next_line = [&](std::string_view& line) {
    while (pos < text.size()) {
      std::size_t end = text.find('\n', pos);
      if (end == std::string::npos) end = text.size();
      line = std::string_view(text).substr(pos, end - pos);
      pos = end + 1;
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      if (!line.empty()) return true;
    }
    return false;
  };

  std::string_view line;
  if (!next_line(line)) throw DataError(path.string() + ": empty file");
  const auto header = split_fields(line);
  const auto wanted = expected_columns();
  std::vector<std::size_t> index(wanted.size());
  for (std::size_t k = 0; k < wanted.size(); ++k) {
    const auto it = std::find(header.begin(), header.end(), wanted[k]);
    if (it == header.end()) {
      throw DataError(path.string() + ": missing column " + wanted[k]);
    }
    index[k] = static_cast<std::size_t>(it - header.begin());
  }

  RecordingSet rs;
  std::vector<double> rows;
  int cur_stim = -1, cur_rep = -1;
  double last_sample = 0.0;
  bool first = true;
  while (next_line(line)) {
    const auto fields = split_fields(line);
    if (fields.size() != header.size()) {
      throw DataError(path.string() + ": line " + std::to_string(line_no) + " has " +
                      std::to_string(fields.size()) + " fields, expected " +
                      std::to_string(header.size()));
    }
    const double sample = parse_number(fields[index[0]], line_no, "sample");
    if (!first && sample != last_sample + 1.0) {
      throw DataError(path.string() + ": line " + std::to_string(line_no) +
                      ": non-contiguous sample index");
    }
    const int stim = parse_int(fields[index[kTotalChannels + 1]], line_no, "stimulus");
    const int rep = parse_int(fields[index[kTotalChannels + 2]], line_no, "repetition");
    if (stim < 0) throw DataError("line " + std::to_string(line_no) + ": negative stimulus");
    if (!first && (stim != cur_stim || rep != cur_rep)) {
      rs.segments.push_back(finish_segment(rows, cur_stim, cur_rep, subject));
    }
    for (int c = 0; c < kTotalChannels; ++c) {
      rows.push_back(parse_number(fields[index[1 + c]], line_no, wanted[1 + c]));
    }
    cur_stim = stim;
    cur_rep = rep;
    last_sample = sample;
    first = false;
  }
  if (first) throw DataError(path.string() + ": no data rows");
  rs.segments.push_back(finish_segment(rows, cur_stim, cur_rep, subject));
  for (const Segment& s : rs.segments) rs.num_classes = std::max(rs.num_classes, s.stimulus);
  return rs;
}

void export_csv(const RecordingSet& rs, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  const auto cols = expected_columns();
  for (std::size_t k = 0; k < cols.size(); ++k) out << (k ? "," : "") << cols[k];
  out << '\n';
  std::uint64_t sample = 0;
  char num[64];
  std::string row;
  for (const Segment& s : rs.segments) {
    for (Eigen::Index i = 0; i < s.length(); ++i) {
      row = std::to_string(sample++);
      for (int c = 0; c < kTotalChannels; ++c) {
        const auto res = std::to_chars(num, num + sizeof num, s.data(c, i));
        row += ',';
        row.append(num, res.ptr);
      }
      row += ',' + std::to_string(s.stimulus) + ',' + std::to_string(s.repetition) + '\n';
      out << row;
    }
  }
  out.close();
  if (!out) throw DataError("failed writing " + path.string());
}

Split split_by_trials(const RecordingSet& rs, const SplitSpec& spec) {
  spec.validate();
  Split out;
  for (const Segment& s : rs.segments) {
    if (s.is_rest()) continue;
    if (s.repetition < 1 || s.repetition > 6) {
      throw DataError("gesture " + std::to_string(s.stimulus) + " has repetition " +
                      std::to_string(s.repetition) + " outside 1..6");
    }
    const auto has = [&](const std::vector<int>& v) {
      return std::find(v.begin(), v.end(), s.repetition) != v.end();
    };
    if (has(spec.train)) out.train.push_back(s);
    else if (has(spec.test)) out.test.push_back(s);
  }
  return out;
}

void SyntheticSpec::validate() const {
  if (num_classes < 2) throw ConfigError("synthetic spec needs at least 2 classes");
  if (repetitions < 1 || repetitions > 6) throw ConfigError("repetitions must be in 1..6");
  if (segment_samples < 1 || rest_samples < 0) {
    throw ConfigError("synthetic segment lengths must be positive");
  }
  if (!(noise >= 0.0)) throw ConfigError("noise must be >= 0");
}

void to_json(nlohmann::json& j, const SyntheticSpec& s) {
  j = {{"num_classes", s.num_classes}, {"repetitions", s.repetitions},
       {"segment_samples", s.segment_samples}, {"rest_samples", s.rest_samples},
       {"noise", s.noise}, {"seed", s.seed}, {"subject", s.subject}};
}

void from_json(const nlohmann::json& j, SyntheticSpec& s) {
  s.num_classes = j.value("num_classes", s.num_classes);
  s.repetitions = j.value("repetitions", s.repetitions);
  s.segment_samples = j.value("segment_samples", s.segment_samples);
  s.rest_samples = j.value("rest_samples", s.rest_samples);
  s.noise = j.value("noise", s.noise);
  s.seed = j.value("seed", s.seed);
  s.subject = j.value("subject", s.subject);
}

namespace {

struct ChannelWave {
  double amplitude, frequency, phase;
};

Mat render(const std::vector<ChannelWave>* waves, int samples, double noise, Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Mat m(kTotalChannels, samples);
  const auto native = static_cast<int>(std::ceil(samples * kAccNativeRate / kSampleRate));
  std::vector<double> acc(static_cast<std::size_t>(native));
  for (int c = 0; c < kTotalChannels; ++c) {
    const bool is_acc = c >= kEmgChannels;
    const double rate = is_acc ? kAccNativeRate : kSampleRate;
    const int n = is_acc ? native : samples;
    for (int i = 0; i < n; ++i) {
      double v = noise > 0.0 ? noise * g(rng) : 0.0;
      if (waves) {
        const ChannelWave& w = (*waves)[static_cast<std::size_t>(c)];
        v += w.amplitude * std::sin(2.0 * std::numbers::pi * w.frequency * i / rate + w.phase);
      }
      if (is_acc) acc[static_cast<std::size_t>(i)] = v;
      else m(c, i) = v;
    }
    if (is_acc) {
      const auto up = resample_to_2khz(acc, kAccNativeRate);
      for (int i = 0; i < samples; ++i) m(c, i) = up[static_cast<std::size_t>(i)];
    }
  }
  return m;
}

}  // namespace

RecordingSet synthesize(const SyntheticSpec& spec) {
  spec.validate();
  Rng params(derive_seed(spec.seed, {0}));
  std::uniform_real_distribution<double> amp(0.2, 2.0), emg_f(20.0, 200.0),
      acc_f(0.5, 4.0), phase(0.0, 2.0 * std::numbers::pi);
  std::vector<std::vector<ChannelWave>> waves(static_cast<std::size_t>(spec.num_classes));
  for (auto& cls : waves) {
    for (int c = 0; c < kTotalChannels; ++c) {
      const double a = amp(params);
      const double f = c < kEmgChannels ? emg_f(params) : acc_f(params);
      cls.push_back({a, f, phase(params)});
    }
  }

  RecordingSet rs;
  rs.num_classes = spec.num_classes;
  for (int rep = 1; rep <= spec.repetitions; ++rep) {
    for (int cls = 1; cls <= spec.num_classes; ++cls) {
      Rng noise(derive_seed(spec.seed, {1, static_cast<std::uint64_t>(rep),
                                        static_cast<std::uint64_t>(cls)}));
      if (spec.rest_samples > 0) {
        Segment rest;
        rest.subject = spec.subject;
        rest.data = render(nullptr, spec.rest_samples, spec.noise, noise);
        rs.segments.push_back(std::move(rest));
      }
      Segment s;
      s.stimulus = cls;
      s.repetition = rep;
      s.subject = spec.subject;
      s.data = render(&waves[static_cast<std::size_t>(cls - 1)], spec.segment_samples,
                      spec.noise, noise);
      rs.segments.push_back(std::move(s));
    }
  }
  return rs;
}

namespace {
constexpr char kRecordingMagic[] = "FNASRECS";
constexpr std::uint32_t kRecordingVersion = 1;
}  // namespace

void write_recordings(const std::filesystem::path& path, const RecordingSet& rs,
                      const nlohmann::json& meta) {
  io::Writer w(path);
  nlohmann::json header = meta;
  header["num_classes"] = rs.num_classes;
  w.header(kRecordingMagic, kRecordingVersion, header);
  w.pod(static_cast<std::uint64_t>(rs.segments.size()));
  for (const Segment& s : rs.segments) {
    w.pod(static_cast<std::int32_t>(s.stimulus));
    w.pod(static_cast<std::int32_t>(s.repetition));
    w.pod(static_cast<std::int32_t>(s.subject));
    w.matrix(s.data);
  }
  w.close();
}

RecordingSet read_recordings(const std::filesystem::path& path, nlohmann::json* meta) {
  io::Reader r(path);
  nlohmann::json header = r.header(kRecordingMagic, kRecordingVersion);
  RecordingSet rs;
  rs.num_classes = header.value("num_classes", 0);
  if (meta) *meta = std::move(header);
  const auto count = r.pod<std::uint64_t>();
  for (std::uint64_t k = 0; k < count; ++k) {
    Segment s;
    s.stimulus = r.pod<std::int32_t>();
    s.repetition = r.pod<std::int32_t>();
    s.subject = r.pod<std::int32_t>();
    s.data = r.matrix();
    if (s.data.rows() != kTotalChannels) {
      throw DataError(path.string() + ": segment " + std::to_string(k) + " has " +
                      std::to_string(s.data.rows()) + " channels");
    }
    rs.segments.push_back(std::move(s));
  }
  return rs;
}

}  // namespace fusenas
