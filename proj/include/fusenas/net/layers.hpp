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

// Layers and blocks of the convolutional runtime. Every module caches what
// its backward pass needs during forward, so forward/backward must be
// called in matching pairs.

#ifndef FUSENAS_NET_LAYERS_HPP_
#define FUSENAS_NET_LAYERS_HPP_

#include <memory>
#include <vector>

#include "fusenas/arch.hpp"
#include "fusenas/genome.hpp"
#include "fusenas/net/tensor.hpp"

namespace fusenas::net {

class Module {
 public:
  virtual ~Module() = default;
  virtual Tensor forward(const Tensor& x) = 0;
  /// Accumulates parameter gradients and returns the input gradient.
  virtual Tensor backward(const Tensor& dy) = 0;
  virtual void collect(std::vector<Param*>& /*out*/) {}
};

/// k x k convolution, stride 1, same padding, with bias. k is 1 or 3.
class Conv2d : public Module {
 public:
  Conv2d(int in_channels, int out_channels, int kernel, Rng& rng);
  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& dy) override;
  void collect(std::vector<Param*>& out) override;

  Param& weight() { return weight_; }
  Param& bias() { return bias_; }

 private:
  int in_;
  int out_;
  int k_;
  Param weight_;  // (k*k*in) x out
  Param bias_;    // 1 x out
  Tensor x_;
};

/// Locally connected 3x3 layer: same padding, an unshared kernel and bias
/// per output site.
class LocalConv2d : public Module {
 public:
  LocalConv2d(Shape in, int out_channels, Rng& rng);
  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& dy) override;
  void collect(std::vector<Param*>& out) override;

 private:
  Shape in_;
  int out_;
  Param weight_;  // (sites*9*in) x out, site-major
  Param bias_;    // sites x out
  Tensor x_;
};

class Relu : public Module {
 public:
  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& dy) override;

 private:
  Tensor y_;
};

/// conv -> ReLU, using either a shared or a locally connected kernel.
class ConvBlock : public Module {
 public:
  ConvBlock(Shape in, int filters, bool local, Rng& rng);
  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& dy) override;
  void collect(std::vector<Param*>& out) override;

 private:
  std::unique_ptr<Module> conv_;
  Relu relu_;
};

/// ReLU(conv(ReLU(conv(x))) + shortcut(x)); the shortcut is a 1x1 conv when
/// channel counts differ, identity otherwise.
class ResidualBlock : public Module {
 public:
  ResidualBlock(Shape in, int filters, bool local, Rng& rng);
  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& dy) override;
  void collect(std::vector<Param*>& out) override;

  bool has_projection() const { return shortcut_ != nullptr; }

 private:
  std::unique_ptr<Module> conv1_;
  Relu relu1_;
  std::unique_ptr<Module> conv2_;
  std::unique_ptr<Module> shortcut_;
  Relu relu_out_;
};

/// Channel gate from average- and max-pooled descriptors through a shared
/// two-layer bottleneck: y = x * sigmoid(mlp(avg) + mlp(max)).
class ChannelAttention : public Module {
 public:
  ChannelAttention(int channels, int reduction, Rng& rng);
  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& dy) override;
  void collect(std::vector<Param*>& out) override;

  const Mat& gate() const { return gate_; }

 private:
  int c_;
  int hidden_;
  Param w1_;
  Param b1_;
  Param w2_;
  Param b2_;
  Tensor x_;
  Mat avg_, max_;
  std::vector<int> argmax_;  // per (sample, channel): site index
  Mat h_avg_, h_max_;
  Mat gate_;  // n x c
};

/// Site gate from channel-wise mean and max through a 3x3 conv:
/// y = x * sigmoid(conv([mean, max])).
class SpatialAttention : public Module {
 public:
  explicit SpatialAttention(Rng& rng);
  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& dy) override;
  void collect(std::vector<Param*>& out) override;

  const Mat& gate() const { return gate_; }

 private:
  Conv2d conv_;
  Tensor x_;
  std::vector<int> argmax_;  // per site row: channel index
  Mat gate_;                 // (n*sites) x 1
};

/// Average pooling onto a fixed output grid with adaptive bin edges
/// [floor(i*H/oh), ceil((i+1)*H/oh)).
class AdaptiveAvgPool : public Module {
 public:
  AdaptiveAvgPool(int out_h, int out_w) : oh_(out_h), ow_(out_w) {}
  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& dy) override;

 private:
  int oh_;
  int ow_;
  int in_h_ = 0;
  int in_w_ = 0;
};

/// Builds the module for one decoded block.
std::unique_ptr<Module> make_block(const BlockSpec& spec, Shape in, Rng& rng);

/// He-uniform initialisation: U(-sqrt(6/fan_in), sqrt(6/fan_in)).
void he_uniform(Mat& m, int fan_in, Rng& rng);

}  // namespace fusenas::net

#endif  // FUSENAS_NET_LAYERS_HPP_
