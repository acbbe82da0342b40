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

#ifndef FUSENAS_NET_NETWORK_HPP_
#define FUSENAS_NET_NETWORK_HPP_

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "fusenas/arch.hpp"
#include "fusenas/dataset.hpp"
#include "fusenas/net/layers.hpp"
#include "fusenas/net/tensor.hpp"

namespace fusenas::net {

/// Network inputs indexed by Stream: sEMG (n,6,12,1), ACC (n,18,12,1),
/// fused (n,24,12,1).
using StreamBatch = std::array<Tensor, 3>;

StreamBatch make_batch(std::span<const Example* const> examples);
StreamBatch make_batch(std::span<const Example> examples);

/// Trainable instantiation of an ArchGraph with a global-average-pool,
/// dense, softmax head.
class Network {
 public:
  Network(const ArchGraph& graph, int num_classes, std::uint64_t seed);

  Network(const Network&) = delete;
  Network& operator=(const Network&) = delete;
  Network(Network&&) = default;
  Network& operator=(Network&&) = default;

  /// Class probabilities, one row per sample. Caches activations for
  /// backward(). Throws NumericError on a shape mismatch.
  Mat forward(const StreamBatch& inputs);

  /// Backpropagates d(loss)/d(logits) through the last forward pass and
  /// accumulates parameter gradients. Returns input gradients per stream.
  StreamBatch backward(const Mat& dlogits);

  void zero_grad();
  std::vector<Param*> params();
  std::size_t parameter_count();
  int num_classes() const { return num_classes_; }
  const ArchGraph& graph() const { return graph_; }

  /// Replaces every parameter value. Throws DataError on a count or shape
  /// mismatch.
  void load_parameters(const std::vector<Mat>& values);

 private:
  ArchGraph graph_;
  int num_classes_;
  std::vector<std::unique_ptr<Module>> modules_;  // per node; null if none
  Param dense_w_;
  Param dense_b_;
  std::vector<Tensor> activations_;
  Mat pooled_;
  int batch_ = 0;
};

/// Mean cross-entropy of probability rows against labels, and the logits
/// gradient (p - onehot) / n.
struct LossAndGrad {
  double loss = 0.0;
  Mat dlogits;
};
LossAndGrad cross_entropy(const Mat& probs, std::span<const int> labels);

}  // namespace fusenas::net

#endif  // FUSENAS_NET_NETWORK_HPP_
