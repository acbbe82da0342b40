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

#include "fusenas/net/network.hpp"

#include <cmath>
#include <string>

#include "fusenas/error.hpp"

namespace fusenas::net {

namespace {

void fill_stream(Tensor& t, int b, const Mat& map) {
  const Eigen::Index off = static_cast<Eigen::Index>(b) * t.sites();
  for (int y = 0; y < t.h; ++y) {
    for (int x = 0; x < t.w; ++x) t.v(off + y * t.w + x, 0) = map(y, x);
  }
}

template <typename Get>
StreamBatch batch_from(std::size_t count, Get get) {
  const int n = static_cast<int>(count);
  StreamBatch batch;
  for (Stream s : {Stream::kSemg, Stream::kAcc, Stream::kFused}) {
    const Shape sh = stream_shape(s);
    batch[static_cast<int>(s)] = Tensor::zeros(n, sh.h, sh.w, 1);
  }
  for (int b = 0; b < n; ++b) {
    const FeatureStreams& f = get(b).streams;
    fill_stream(batch[0], b, f.semg);
    fill_stream(batch[1], b, f.acc);
    fill_stream(batch[2], b, f.fused);
  }
  return batch;
}

}  // namespace

StreamBatch make_batch(std::span<const Example* const> examples) {
  return batch_from(examples.size(),
                    [&](int b) -> const Example& { return *examples[b]; });
}

StreamBatch make_batch(std::span<const Example> examples) {
  return batch_from(examples.size(),
                    [&](int b) -> const Example& { return examples[b]; });
}

Network::Network(const ArchGraph& graph, int num_classes, std::uint64_t seed)
    : graph_(graph),
      num_classes_(num_classes),
      dense_w_("dense.w", graph.nodes.at(graph.head).out.c, num_classes),
      dense_b_("dense.b", 1, num_classes) {
  if (num_classes < 2) throw ConfigError("num_classes must be >= 2");
  Rng rng(seed);
  modules_.resize(graph_.nodes.size());
  for (std::size_t i = 0; i < graph_.nodes.size(); ++i) {
    const Node& n = graph_.nodes[i];
    if (n.op == NodeOp::kBlock) {
      modules_[i] = make_block(n.block, graph_.nodes[n.inputs[0]].out, rng);
    } else if (n.op == NodeOp::kAlign) {
      modules_[i] = std::make_unique<AdaptiveAvgPool>(n.out.h, n.out.w);
    }
  }
  he_uniform(dense_w_.value, dense_w_.value.rows(), rng);
}

Mat Network::forward(const StreamBatch& inputs) {
  const int n = inputs[0].n;
  batch_ = n;
  activations_.assign(graph_.nodes.size(), Tensor{});
  for (std::size_t i = 0; i < graph_.nodes.size(); ++i) {
    const Node& node = graph_.nodes[i];
    switch (node.op) {
      case NodeOp::kInput: {
        const Tensor& in = inputs[static_cast<int>(node.stream)];
        const Shape want = stream_shape(node.stream);
        if (in.n != n || !(in.shape() == want)) {
          throw NumericError("input stream '" +
                             std::string(to_string(node.stream)) +
                             "' has the wrong shape");
        }
        activations_[i] = in;
        break;
      }
      case NodeOp::kBlock:
      case NodeOp::kAlign:
        activations_[i] = modules_[i]->forward(activations_[node.inputs[0]]);
        break;
      case NodeOp::kFuse: {
        const Tensor& a = activations_[node.inputs[0]];
        const Tensor& b = activations_[node.inputs[1]];
        Tensor out = Tensor::zeros(n, a.h, a.w, a.c + b.c);
        out.v.leftCols(a.c) = a.v;
        out.v.rightCols(b.c) = b.v;
        activations_[i] = std::move(out);
        break;
      }
      case NodeOp::kHead:
        break;
    }
  }

  const Tensor& last = activations_[graph_.nodes[graph_.head].inputs[0]];
  const int sites = last.sites();
  pooled_.resize(n, last.c);
  for (int b = 0; b < n; ++b) {
    pooled_.row(b) =
        last.v.middleRows(static_cast<Eigen::Index>(b) * sites, sites).colwise().mean();
  }
  Mat logits = pooled_ * dense_w_.value;
  logits.rowwise() += dense_b_.value.row(0);
  for (int b = 0; b < n; ++b) {
    auto row = logits.row(b);
    row.array() -= row.maxCoeff();
    row = row.array().exp().matrix();
    row /= row.sum();
  }
  return logits;
}

StreamBatch Network::backward(const Mat& dlogits) {
  const int n = batch_;
  std::vector<Tensor> grads(graph_.nodes.size());
  auto accumulate = [&](int node, const Tensor& g) {
    if (grads[node].v.size() == 0) {
      grads[node] = g;
    } else {
      grads[node].v += g.v;
    }
  };

  dense_w_.grad.noalias() += pooled_.transpose() * dlogits;
  dense_b_.grad.row(0) += dlogits.colwise().sum();
  const Mat dpooled = dlogits * dense_w_.value.transpose();
  const int last_id = graph_.nodes[graph_.head].inputs[0];
  const Tensor& last = activations_[last_id];
  const int sites = last.sites();
  Tensor dlast = Tensor::like(last);
  for (int b = 0; b < n; ++b) {
    dlast.v.middleRows(static_cast<Eigen::Index>(b) * sites, sites).rowwise() =
        dpooled.row(b) / static_cast<double>(sites);
  }
  accumulate(last_id, dlast);

  StreamBatch dinputs;
  for (int i = static_cast<int>(graph_.nodes.size()) - 1; i >= 0; --i) {
    const Node& node = graph_.nodes[i];
    if (grads[i].v.size() == 0) continue;
    switch (node.op) {
      case NodeOp::kInput:
        dinputs[static_cast<int>(node.stream)] = grads[i];
        break;
      case NodeOp::kBlock:
      case NodeOp::kAlign:
        accumulate(node.inputs[0], modules_[i]->backward(grads[i]));
        break;
      case NodeOp::kFuse: {
        const Tensor& a = activations_[node.inputs[0]];
        const Tensor& b = activations_[node.inputs[1]];
        Tensor da = Tensor::like(a);
        Tensor db = Tensor::like(b);
        da.v = grads[i].v.leftCols(a.c);
        db.v = grads[i].v.rightCols(b.c);
        accumulate(node.inputs[0], da);
        accumulate(node.inputs[1], db);
        break;
      }
      case NodeOp::kHead:
        break;
    }
    grads[i] = Tensor{};
  }
  return dinputs;
}

void Network::zero_grad() {
  for (Param* p : params()) p->grad.setZero();
}

std::vector<Param*> Network::params() {
  std::vector<Param*> out;
  for (auto& m : modules_) {
    if (m) m->collect(out);
  }
  out.push_back(&dense_w_);
  out.push_back(&dense_b_);
  return out;
}

std::size_t Network::parameter_count() {
  std::size_t total = 0;
  for (Param* p : params()) total += static_cast<std::size_t>(p->value.size());
  return total;
}

void Network::load_parameters(const std::vector<Mat>& values) {
  std::vector<Param*> ps = params();
  if (ps.size() != values.size()) {
    throw DataError("checkpoint has " + std::to_string(values.size()) +
                    " parameter tensors, network expects " +
                    std::to_string(ps.size()));
  }
  for (std::size_t i = 0; i < ps.size(); ++i) {
    if (ps[i]->value.rows() != values[i].rows() ||
        ps[i]->value.cols() != values[i].cols()) {
      throw DataError("checkpoint parameter " + std::to_string(i) +
                      " has the wrong shape");
    }
    ps[i]->value = values[i];
  }
}

LossAndGrad cross_entropy(const Mat& probs, std::span<const int> labels) {
  const Eigen::Index n = probs.rows();
  if (static_cast<std::size_t>(n) != labels.size()) {
    throw NumericError("label count does not match batch size");
  }
  LossAndGrad out;
  out.dlogits = probs;
  for (Eigen::Index b = 0; b < n; ++b) {
    const int y = labels[static_cast<std::size_t>(b)];
    if (y < 0 || y >= probs.cols()) throw NumericError("label out of range");
    out.loss -= std::log(probs(b, y));
    out.dlogits(b, y) -= 1.0;
  }
  out.loss /= static_cast<double>(n);
  out.dlogits /= static_cast<double>(n);
  return out;
}

}  // namespace fusenas::net
