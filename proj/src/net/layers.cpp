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

#include "fusenas/net/layers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fusenas/error.hpp"

namespace fusenas::net {

namespace {

using StridedMap = Eigen::Map<Mat, 0, Eigen::OuterStride<>>;
using ConstStridedMap = Eigen::Map<const Mat, 0, Eigen::OuterStride<>>;

// Row (b*H + y)*W + x of the result holds the k*k neighbourhood of site
// (y, x), block (ky*k + kx) of width c; out-of-bounds taps stay zero.
Mat im2col(const Tensor& x, int k) {
  const int pad = k / 2;
  Mat cols = Mat::Zero(x.v.rows(), static_cast<Eigen::Index>(k) * k * x.c);
  for (int b = 0; b < x.n; ++b) {
    for (int y = 0; y < x.h; ++y) {
      for (int xx = 0; xx < x.w; ++xx) {
        const Eigen::Index r = (static_cast<Eigen::Index>(b) * x.h + y) * x.w + xx;
        for (int ky = 0; ky < k; ++ky) {
          const int sy = y + ky - pad;
          if (sy < 0 || sy >= x.h) continue;
          for (int kx = 0; kx < k; ++kx) {
            const int sx = xx + kx - pad;
            if (sx < 0 || sx >= x.w) continue;
            const Eigen::Index src = (static_cast<Eigen::Index>(b) * x.h + sy) * x.w + sx;
            cols.row(r).segment((ky * k + kx) * x.c, x.c) = x.v.row(src);
          }
        }
      }
    }
  }
  return cols;
}

void col2im_add(const Mat& cols, int k, Tensor& dx) {
  const int pad = k / 2;
  for (int b = 0; b < dx.n; ++b) {
    for (int y = 0; y < dx.h; ++y) {
      for (int xx = 0; xx < dx.w; ++xx) {
        const Eigen::Index r = (static_cast<Eigen::Index>(b) * dx.h + y) * dx.w + xx;
        for (int ky = 0; ky < k; ++ky) {
          const int sy = y + ky - pad;
          if (sy < 0 || sy >= dx.h) continue;
          for (int kx = 0; kx < k; ++kx) {
            const int sx = xx + kx - pad;
            if (sx < 0 || sx >= dx.w) continue;
            const Eigen::Index dst = (static_cast<Eigen::Index>(b) * dx.h + sy) * dx.w + sx;
            dx.v.row(dst) += cols.row(r).segment((ky * k + kx) * dx.c, dx.c);
          }
        }
      }
    }
  }
}

Mat sigmoid(const Mat& s) {
  return (1.0 / (1.0 + (-s.array()).exp())).matrix();
}

void check_channels(const Tensor& x, int expected, const char* who) {
  if (x.c != expected) {
    throw NumericError(std::string(who) + ": expected " +
                       std::to_string(expected) + " channels, got " +
                       std::to_string(x.c));
  }
}

}  // namespace

void he_uniform(Mat& m, int fan_in, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = dist(rng);
  }
}

// ---- Conv2d ----

Conv2d::Conv2d(int in_channels, int out_channels, int kernel, Rng& rng)
    : in_(in_channels),
      out_(out_channels),
      k_(kernel),
      weight_("conv.w", kernel * kernel * in_channels, out_channels),
      bias_("conv.b", 1, out_channels) {
  he_uniform(weight_.value, kernel * kernel * in_channels, rng);
}

Tensor Conv2d::forward(const Tensor& x) {
  check_channels(x, in_, "conv");
  x_ = x;
  Tensor y{x.n, x.h, x.w, out_, Mat()};
  if (k_ == 1) {
    y.v.noalias() = x.v * weight_.value;
  } else {
    y.v.noalias() = im2col(x, k_) * weight_.value;
  }
  y.v.rowwise() += bias_.value.row(0);
  return y;
}

Tensor Conv2d::backward(const Tensor& dy) {
  Tensor dx = Tensor::like(x_);
  bias_.grad.row(0) += dy.v.colwise().sum();
  if (k_ == 1) {
    weight_.grad.noalias() += x_.v.transpose() * dy.v;
    dx.v.noalias() = dy.v * weight_.value.transpose();
  } else {
    const Mat cols = im2col(x_, k_);
    weight_.grad.noalias() += cols.transpose() * dy.v;
    const Mat dcols = dy.v * weight_.value.transpose();
    col2im_add(dcols, k_, dx);
  }
  return dx;
}

void Conv2d::collect(std::vector<Param*>& out) {
  out.push_back(&weight_);
  out.push_back(&bias_);
}

// ---- LocalConv2d ----

LocalConv2d::LocalConv2d(Shape in, int out_channels, Rng& rng)
    : in_(in),
      out_(out_channels),
      weight_("local.w", in.sites() * 9 * in.c, out_channels),
      bias_("local.b", in.sites(), out_channels) {
  he_uniform(weight_.value, 9 * in.c, rng);
}

Tensor LocalConv2d::forward(const Tensor& x) {
  if (!(x.shape() == in_)) {
    throw NumericError("local conv: input shape mismatch");
  }
  x_ = x;
  const int sites = in_.sites();
  const int k = 9 * in_.c;
  const Mat cols = im2col(x, 3);
  Tensor y = Tensor::zeros(x.n, x.h, x.w, out_);
  for (int s = 0; s < sites; ++s) {
    ConstStridedMap cs(cols.data() + static_cast<Eigen::Index>(s) * k, x.n, k,
                       Eigen::OuterStride<>(static_cast<Eigen::Index>(sites) * k));
    StridedMap ys(y.v.data() + static_cast<Eigen::Index>(s) * out_, x.n, out_,
                  Eigen::OuterStride<>(static_cast<Eigen::Index>(sites) * out_));
    ys.noalias() = cs * weight_.value.middleRows(static_cast<Eigen::Index>(s) * k, k);
    ys.rowwise() += bias_.value.row(s);
  }
  return y;
}

Tensor LocalConv2d::backward(const Tensor& dy) {
  const int sites = in_.sites();
  const int k = 9 * in_.c;
  const Mat cols = im2col(x_, 3);
  Mat dcols = Mat::Zero(cols.rows(), cols.cols());
  for (int s = 0; s < sites; ++s) {
    ConstStridedMap cs(cols.data() + static_cast<Eigen::Index>(s) * k, x_.n, k,
                       Eigen::OuterStride<>(static_cast<Eigen::Index>(sites) * k));
    ConstStridedMap dys(dy.v.data() + static_cast<Eigen::Index>(s) * out_, x_.n, out_,
                        Eigen::OuterStride<>(static_cast<Eigen::Index>(sites) * out_));
    StridedMap dcs(dcols.data() + static_cast<Eigen::Index>(s) * k, x_.n, k,
                   Eigen::OuterStride<>(static_cast<Eigen::Index>(sites) * k));
    auto w = weight_.value.middleRows(static_cast<Eigen::Index>(s) * k, k);
    weight_.grad.middleRows(static_cast<Eigen::Index>(s) * k, k).noalias() +=
        cs.transpose() * dys;
    bias_.grad.row(s) += dys.colwise().sum();
    dcs.noalias() = dys * w.transpose();
  }
  Tensor dx = Tensor::like(x_);
  col2im_add(dcols, 3, dx);
  return dx;
}

void LocalConv2d::collect(std::vector<Param*>& out) {
  out.push_back(&weight_);
  out.push_back(&bias_);
}

// ---- Relu ----

Tensor Relu::forward(const Tensor& x) {
  y_ = x;
  y_.v = x.v.cwiseMax(0.0);
  return y_;
}

Tensor Relu::backward(const Tensor& dy) {
  Tensor dx = dy;
  dx.v = (y_.v.array() > 0.0).select(dy.v, 0.0);
  return dx;
}

// ---- ConvBlock ----

ConvBlock::ConvBlock(Shape in, int filters, bool local, Rng& rng) {
  if (local) {
    conv_ = std::make_unique<LocalConv2d>(in, filters, rng);
  } else {
    conv_ = std::make_unique<Conv2d>(in.c, filters, 3, rng);
  }
}

Tensor ConvBlock::forward(const Tensor& x) {
  return relu_.forward(conv_->forward(x));
}

Tensor ConvBlock::backward(const Tensor& dy) {
  return conv_->backward(relu_.backward(dy));
}

void ConvBlock::collect(std::vector<Param*>& out) { conv_->collect(out); }

// ---- ResidualBlock ----

ResidualBlock::ResidualBlock(Shape in, int filters, bool local, Rng& rng) {
  const Shape mid{in.h, in.w, filters};
  if (local) {
    conv1_ = std::make_unique<LocalConv2d>(in, filters, rng);
    conv2_ = std::make_unique<LocalConv2d>(mid, filters, rng);
  } else {
    conv1_ = std::make_unique<Conv2d>(in.c, filters, 3, rng);
    conv2_ = std::make_unique<Conv2d>(filters, filters, 3, rng);
  }
  if (in.c != filters) shortcut_ = std::make_unique<Conv2d>(in.c, filters, 1, rng);
}

Tensor ResidualBlock::forward(const Tensor& x) {
  Tensor main = conv2_->forward(relu1_.forward(conv1_->forward(x)));
  if (shortcut_) {
    main.v += shortcut_->forward(x).v;
  } else {
    main.v += x.v;
  }
  return relu_out_.forward(main);
}

Tensor ResidualBlock::backward(const Tensor& dy) {
  const Tensor d = relu_out_.backward(dy);
  Tensor dx = conv1_->backward(relu1_.backward(conv2_->backward(d)));
  if (shortcut_) {
    dx.v += shortcut_->backward(d).v;
  } else {
    dx.v += d.v;
  }
  return dx;
}

void ResidualBlock::collect(std::vector<Param*>& out) {
  conv1_->collect(out);
  conv2_->collect(out);
  if (shortcut_) shortcut_->collect(out);
}

// ---- ChannelAttention ----

ChannelAttention::ChannelAttention(int channels, int reduction, Rng& rng)
    : c_(channels),
      hidden_(std::max(1, channels / std::max(1, reduction))),
      w1_("ca.w1", channels, hidden_),
      b1_("ca.b1", 1, hidden_),
      w2_("ca.w2", hidden_, channels),
      b2_("ca.b2", 1, channels) {
  he_uniform(w1_.value, channels, rng);
  he_uniform(w2_.value, hidden_, rng);
}

Tensor ChannelAttention::forward(const Tensor& x) {
  check_channels(x, c_, "channel attention");
  x_ = x;
  const int sites = x.sites();
  avg_ = Mat::Zero(x.n, c_);
  max_ = Mat::Zero(x.n, c_);
  argmax_.assign(static_cast<std::size_t>(x.n) * c_, 0);
  for (int b = 0; b < x.n; ++b) {
    auto block = x.v.middleRows(static_cast<Eigen::Index>(b) * sites, sites);
    avg_.row(b) = block.colwise().mean();
    for (int ch = 0; ch < c_; ++ch) {
      Eigen::Index arg = 0;
      max_(b, ch) = block.col(ch).maxCoeff(&arg);
      argmax_[static_cast<std::size_t>(b) * c_ + ch] = static_cast<int>(arg);
    }
  }
  auto mlp_hidden = [&](const Mat& p) {
    Mat h = p * w1_.value;
    h.rowwise() += b1_.value.row(0);
    return Mat(h.cwiseMax(0.0));
  };
  h_avg_ = mlp_hidden(avg_);
  h_max_ = mlp_hidden(max_);
  Mat s = h_avg_ * w2_.value + h_max_ * w2_.value;
  s.rowwise() += 2.0 * b2_.value.row(0);
  gate_ = sigmoid(s);

  Tensor y = x;
  for (int b = 0; b < x.n; ++b) {
    auto block = y.v.middleRows(static_cast<Eigen::Index>(b) * sites, sites);
    block.array().rowwise() *= gate_.row(b).array();
  }
  return y;
}

Tensor ChannelAttention::backward(const Tensor& dy) {
  const int sites = x_.sites();
  Tensor dx = dy;
  Mat dgate = Mat::Zero(x_.n, c_);
  for (int b = 0; b < x_.n; ++b) {
    const Eigen::Index off = static_cast<Eigen::Index>(b) * sites;
    auto dyb = dy.v.middleRows(off, sites);
    auto xb = x_.v.middleRows(off, sites);
    dgate.row(b) = (dyb.array() * xb.array()).colwise().sum();
    dx.v.middleRows(off, sites).array().rowwise() *= gate_.row(b).array();
  }
  const Mat ds = (dgate.array() * gate_.array() * (1.0 - gate_.array())).matrix();

  w2_.grad.noalias() += h_avg_.transpose() * ds + h_max_.transpose() * ds;
  b2_.grad.row(0) += 2.0 * ds.colwise().sum();
  auto back_hidden = [&](const Mat& h, const Mat& p) {
    const Mat dh = (h.array() > 0.0).select(ds * w2_.value.transpose(), 0.0);
    w1_.grad.noalias() += p.transpose() * dh;
    b1_.grad.row(0) += dh.colwise().sum();
    return Mat(dh * w1_.value.transpose());
  };
  const Mat d_avg = back_hidden(h_avg_, avg_);
  const Mat d_max = back_hidden(h_max_, max_);

  for (int b = 0; b < x_.n; ++b) {
    const Eigen::Index off = static_cast<Eigen::Index>(b) * sites;
    dx.v.middleRows(off, sites).rowwise() += d_avg.row(b) / static_cast<double>(sites);
    for (int ch = 0; ch < c_; ++ch) {
      const int site = argmax_[static_cast<std::size_t>(b) * c_ + ch];
      dx.v(off + site, ch) += d_max(b, ch);
    }
  }
  return dx;
}

void ChannelAttention::collect(std::vector<Param*>& out) {
  out.push_back(&w1_);
  out.push_back(&b1_);
  out.push_back(&w2_);
  out.push_back(&b2_);
}

// ---- SpatialAttention ----

SpatialAttention::SpatialAttention(Rng& rng) : conv_(2, 1, 3, rng) {}

Tensor SpatialAttention::forward(const Tensor& x) {
  x_ = x;
  const Eigen::Index rows = x.v.rows();
  Tensor pooled = Tensor::zeros(x.n, x.h, x.w, 2);
  argmax_.assign(static_cast<std::size_t>(rows), 0);
  for (Eigen::Index r = 0; r < rows; ++r) {
    Eigen::Index arg = 0;
    pooled.v(r, 0) = x.v.row(r).mean();
    pooled.v(r, 1) = x.v.row(r).maxCoeff(&arg);
    argmax_[static_cast<std::size_t>(r)] = static_cast<int>(arg);
  }
  gate_ = sigmoid(conv_.forward(pooled).v);
  Tensor y = x;
  y.v.array().colwise() *= gate_.col(0).array();
  return y;
}

Tensor SpatialAttention::backward(const Tensor& dy) {
  const Eigen::Index rows = x_.v.rows();
  Tensor dx = dy;
  dx.v.array().colwise() *= gate_.col(0).array();
  Tensor ds = Tensor::zeros(x_.n, x_.h, x_.w, 1);
  ds.v.col(0) = ((dy.v.array() * x_.v.array()).rowwise().sum() *
                 gate_.col(0).array() * (1.0 - gate_.col(0).array()))
                    .matrix();
  const Tensor dpooled = conv_.backward(ds);
  const double inv_c = 1.0 / static_cast<double>(x_.c);
  for (Eigen::Index r = 0; r < rows; ++r) {
    dx.v.row(r).array() += dpooled.v(r, 0) * inv_c;
    dx.v(r, argmax_[static_cast<std::size_t>(r)]) += dpooled.v(r, 1);
  }
  return dx;
}

void SpatialAttention::collect(std::vector<Param*>& out) { conv_.collect(out); }

// ---- AdaptiveAvgPool ----

namespace {

int bin_start(int i, int in, int out) { return (i * in) / out; }
int bin_end(int i, int in, int out) { return ((i + 1) * in + out - 1) / out; }

}  // namespace

Tensor AdaptiveAvgPool::forward(const Tensor& x) {
  in_h_ = x.h;
  in_w_ = x.w;
  Tensor y = Tensor::zeros(x.n, oh_, ow_, x.c);
  for (int b = 0; b < x.n; ++b) {
    for (int oy = 0; oy < oh_; ++oy) {
      const int y0 = bin_start(oy, x.h, oh_), y1 = bin_end(oy, x.h, oh_);
      for (int ox = 0; ox < ow_; ++ox) {
        const int x0 = bin_start(ox, x.w, ow_), x1 = bin_end(ox, x.w, ow_);
        const Eigen::Index r = (static_cast<Eigen::Index>(b) * oh_ + oy) * ow_ + ox;
        for (int sy = y0; sy < y1; ++sy) {
          for (int sx = x0; sx < x1; ++sx) {
            y.v.row(r) += x.v.row((static_cast<Eigen::Index>(b) * x.h + sy) * x.w + sx);
          }
        }
        y.v.row(r) /= static_cast<double>((y1 - y0) * (x1 - x0));
      }
    }
  }
  return y;
}

Tensor AdaptiveAvgPool::backward(const Tensor& dy) {
  Tensor dx = Tensor::zeros(dy.n, in_h_, in_w_, dy.c);
  for (int b = 0; b < dy.n; ++b) {
    for (int oy = 0; oy < oh_; ++oy) {
      const int y0 = bin_start(oy, in_h_, oh_), y1 = bin_end(oy, in_h_, oh_);
      for (int ox = 0; ox < ow_; ++ox) {
        const int x0 = bin_start(ox, in_w_, ow_), x1 = bin_end(ox, in_w_, ow_);
        const Eigen::Index r = (static_cast<Eigen::Index>(b) * oh_ + oy) * ow_ + ox;
        const double scale = 1.0 / static_cast<double>((y1 - y0) * (x1 - x0));
        for (int sy = y0; sy < y1; ++sy) {
          for (int sx = x0; sx < x1; ++sx) {
            dx.v.row((static_cast<Eigen::Index>(b) * in_h_ + sy) * in_w_ + sx) +=
                dy.v.row(r) * scale;
          }
        }
      }
    }
  }
  return dx;
}

// ---- factory ----

std::unique_ptr<Module> make_block(const BlockSpec& spec, Shape in, Rng& rng) {
  switch (spec.kind) {
    case BlockKind::kOrdinaryConv:
      return std::make_unique<ConvBlock>(in, spec.filters, false, rng);
    case BlockKind::kResidualConv:
      return std::make_unique<ResidualBlock>(in, spec.filters, false, rng);
    case BlockKind::kLocalConv:
      return std::make_unique<ConvBlock>(in, spec.filters, true, rng);
    case BlockKind::kLocalResidualConv:
      return std::make_unique<ResidualBlock>(in, spec.filters, true, rng);
    case BlockKind::kChannelAttention:
      return std::make_unique<ChannelAttention>(in.c, spec.reduction_ratio, rng);
    case BlockKind::kSpatialAttention:
      return std::make_unique<SpatialAttention>(rng);
  }
  throw std::logic_error("unknown block kind");
}

}  // namespace fusenas::net
