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

#ifndef FUSENAS_ERROR_HPP_
#define FUSENAS_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace fusenas {

// Error categories map one-to-one onto CLI exit codes (2, 3, 4).

/// Invalid configuration, malformed genome text, out-of-range genes.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A gene outside its candidate range.
class RangeError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

/// Malformed, missing or inconsistent input data.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite values, shape mismatches and other runtime numeric failures.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace fusenas

#endif  // FUSENAS_ERROR_HPP_
