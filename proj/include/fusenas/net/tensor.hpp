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

#ifndef FUSENAS_NET_TENSOR_HPP_
#define FUSENAS_NET_TENSOR_HPP_

#include <string>
#include <utility>

#include "fusenas/arch.hpp"
#include "fusenas/dataset.hpp"

namespace fusenas::net {

/// Batch of feature maps. Row (b * h + y) * w + x holds the channel vector
/// of site (y, x) of sample b.
struct Tensor {
  int n = 0;
  int h = 0;
  int w = 0;
  int c = 0;
  Mat v;

  static Tensor zeros(int n, int h, int w, int c) {
    return Tensor{n, h, w, c, Mat::Zero(static_cast<Eigen::Index>(n) * h * w, c)};
  }
  static Tensor like(const Tensor& t) { return zeros(t.n, t.h, t.w, t.c); }

  int sites() const { return h * w; }
  Shape shape() const { return {h, w, c}; }
  bool all_finite() const { return v.allFinite(); }
};

/// Trainable parameter with its gradient and Adam moments.
struct Param {
  std::string name;
  Mat value;
  Mat grad;
  Mat m;
  Mat v;

  explicit Param(std::string n, int rows, int cols)
      : name(std::move(n)),
        value(Mat::Zero(rows, cols)),
        grad(Mat::Zero(rows, cols)),
        m(Mat::Zero(rows, cols)),
        v(Mat::Zero(rows, cols)) {}
};

}  // namespace fusenas::net

#endif  // FUSENAS_NET_TENSOR_HPP_
