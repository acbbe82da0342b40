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

// Little helpers for the versioned binary files (checkpoints, feature and
// recording caches). Values are written in host byte order.

#ifndef FUSENAS_SRC_BINARY_IO_HPP_
#define FUSENAS_SRC_BINARY_IO_HPP_

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>

#include <json.hpp>

#include "fusenas/dataset.hpp"
#include "fusenas/error.hpp"

namespace fusenas::io {

class Writer {
 public:
  explicit Writer(const std::filesystem::path& path) : path_(path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    out_.open(path, std::ios::binary | std::ios::trunc);
    if (!out_) throw DataError("cannot open " + path.string() + " for writing");
  }

  template <typename T>
  void pod(const T& v) {
    out_.write(reinterpret_cast<const char*>(&v), sizeof(T));
  }

  void bytes(std::string_view s) { out_.write(s.data(), static_cast<std::streamsize>(s.size())); }

  void header(std::string_view magic, std::uint32_t version,
              const nlohmann::json& meta) {
    bytes(magic);
    pod(version);
    const std::string text = meta.dump();
    pod(static_cast<std::uint64_t>(text.size()));
    bytes(text);
  }

  void matrix(const Mat& m) {
    pod(static_cast<std::uint64_t>(m.rows()));
    pod(static_cast<std::uint64_t>(m.cols()));
    out_.write(reinterpret_cast<const char*>(m.data()),
               static_cast<std::streamsize>(m.size() * sizeof(double)));
  }

  void close() {
    out_.close();
    if (!out_) throw DataError("failed writing " + path_.string());
  }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

class Reader {
 public:
  explicit Reader(const std::filesystem::path& path) : path_(path) {
    in_.open(path, std::ios::binary);
    if (!in_) throw DataError("cannot open " + path.string());
  }

  template <typename T>
  T pod() {
    T v{};
    in_.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in_) truncated();
    return v;
  }

  std::string bytes(std::size_t n) {
    std::string s(n, '\0');
    in_.read(s.data(), static_cast<std::streamsize>(n));
    if (!in_) truncated();
    return s;
  }

  /// Checks magic and version, returns the JSON header.
  nlohmann::json header(std::string_view magic, std::uint32_t version) {
    if (bytes(magic.size()) != magic) {
      throw DataError(path_.string() + ": bad magic, not a " +
                      std::string(magic) + " file");
    }
    const auto v = pod<std::uint32_t>();
    if (v != version) {
      throw DataError(path_.string() + ": unsupported version " +
                      std::to_string(v));
    }
    const auto len = pod<std::uint64_t>();
    try {
      return nlohmann::json::parse(bytes(len));
    } catch (const nlohmann::json::exception& e) {
      throw DataError(path_.string() + ": corrupt header: " + e.what());
    }
  }

  Mat matrix() {
    const auto rows = pod<std::uint64_t>();
    const auto cols = pod<std::uint64_t>();
    if (rows > (1ULL << 32) || cols > (1ULL << 32)) {
      throw DataError(path_.string() + ": implausible matrix shape");
    }
    Mat m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    in_.read(reinterpret_cast<char*>(m.data()),
             static_cast<std::streamsize>(m.size() * sizeof(double)));
    if (!in_) truncated();
    return m;
  }

 private:
  [[noreturn]] void truncated() {
    throw DataError(path_.string() + ": truncated file");
  }

  std::filesystem::path path_;
  std::ifstream in_;
};

}  // namespace fusenas::io

#endif  // FUSENAS_SRC_BINARY_IO_HPP_
