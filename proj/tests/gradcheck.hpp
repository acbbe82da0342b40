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

// Central finite-difference oracle for block gradients. The probe loss is
// L(x) = sum(R .* block(x)) for a fixed random R, so dL/dy = R.

#ifndef FUSENAS_TESTS_GRADCHECK_HPP_
#define FUSENAS_TESTS_GRADCHECK_HPP_

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "fusenas/net/layers.hpp"

namespace fusenas::testing {

inline constexpr double kFdStep = 1e-5;

/// |a - n| / max(|a|, |n|), with gradients below `floor` in both routes
/// compared on the floor instead, where finite differences are dominated
/// by rounding.
inline double relative_error(double analytic, double numeric,
                             double floor = 1e-6) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / scale;
}

inline net::Tensor random_tensor(int n, Shape s, std::mt19937_64& rng) {
  std::normal_distribution<double> d(0.0, 1.0);
  net::Tensor t = net::Tensor::zeros(n, s.h, s.w, s.c);
  for (Eigen::Index i = 0; i < t.v.size(); ++i) t.v.data()[i] = d(rng);
  return t;
}

struct GradCheckResult {
  double max_param_error = 0.0;
  double max_input_error = 0.0;
  std::size_t checked = 0;
  double max_error() const { return std::max(max_param_error, max_input_error); }
};

/// Compares every parameter and input gradient of `m` against central
/// differences with step kFdStep.
inline GradCheckResult grad_check(net::Module& m, const net::Tensor& x,
                                  std::mt19937_64& rng) {
  const net::Tensor y0 = m.forward(x);
  net::Tensor r = random_tensor(y0.n, y0.shape(), rng);
  auto probe = [&](const net::Tensor& in) {
    return m.forward(in).v.cwiseProduct(r.v).sum();
  };

  std::vector<net::Param*> params;
  m.collect(params);
  for (net::Param* p : params) p->grad.setZero();
  m.forward(x);
  const net::Tensor dx = m.backward(r);

  GradCheckResult res;
  for (net::Param* p : params) {
    for (Eigen::Index i = 0; i < p->value.size(); ++i) {
      double& w = p->value.data()[i];
      const double keep = w;
      w = keep + kFdStep;
      const double up = probe(x);
      w = keep - kFdStep;
      const double down = probe(x);
      w = keep;
      const double numeric = (up - down) / (2.0 * kFdStep);
      res.max_param_error = std::max(
          res.max_param_error, relative_error(p->grad.data()[i], numeric));
      ++res.checked;
    }
  }
  net::Tensor xp = x;
  for (Eigen::Index i = 0; i < x.v.size(); ++i) {
    const double keep = xp.v.data()[i];
    xp.v.data()[i] = keep + kFdStep;
    const double up = probe(xp);
    xp.v.data()[i] = keep - kFdStep;
    const double down = probe(xp);
    xp.v.data()[i] = keep;
    const double numeric = (up - down) / (2.0 * kFdStep);
    res.max_input_error =
        std::max(res.max_input_error, relative_error(dx.v.data()[i], numeric));
    ++res.checked;
  }
  return res;
}

/// Runs grad_check on a freshly built block for each of `trials` random
/// 4-sample inputs and returns the worst result.
inline GradCheckResult grad_check_block(const BlockSpec& spec, Shape in,
                                        int trials, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  GradCheckResult worst;
  for (int t = 0; t < trials; ++t) {
    Rng init(seed * 1000 + static_cast<std::uint64_t>(t));
    auto block = net::make_block(spec, in, init);
    // Random biases so that zero-initialised ones are exercised too.
    std::vector<net::Param*> params;
    block->collect(params);
    std::normal_distribution<double> d(0.0, 0.1);
    for (net::Param* p : params) {
      if (p->name.back() == 'b' || p->name.find(".b") != std::string::npos) {
        for (Eigen::Index i = 0; i < p->value.size(); ++i) p->value.data()[i] = d(rng);
      }
    }
    const net::Tensor x = random_tensor(4, in, rng);
    const GradCheckResult r = grad_check(*block, x, rng);
    worst.max_param_error = std::max(worst.max_param_error, r.max_param_error);
    worst.max_input_error = std::max(worst.max_input_error, r.max_input_error);
    worst.checked += r.checked;
  }
  return worst;
}

/// Representative spec for each block kind.
inline BlockSpec spec_for(BlockKind kind, int filters) {
  BlockSpec s;
  s.kind = kind;
  s.filters = filters;
  if (kind == BlockKind::kChannelAttention) s.reduction_ratio = 2;
  return s;
}

}  // namespace fusenas::testing

#endif  // FUSENAS_TESTS_GRADCHECK_HPP_
