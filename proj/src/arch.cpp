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

#include "fusenas/arch.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace fusenas {

std::string_view to_string(Stream s) {
  switch (s) {
    case Stream::kSemg: return "semg";
    case Stream::kAcc: return "acc";
    case Stream::kFused: return "fused";
  }
  return "?";
}

std::string_view to_string(BlockKind k) {
  switch (k) {
    case BlockKind::kOrdinaryConv: return "OrdinaryConv";
    case BlockKind::kResidualConv: return "ResidualConv";
    case BlockKind::kLocalConv: return "LocalConv";
    case BlockKind::kLocalResidualConv: return "LocalResidualConv";
    case BlockKind::kChannelAttention: return "ChannelAttention";
    case BlockKind::kSpatialAttention: return "SpatialAttention";
  }
  return "?";
}

bool is_attention(BlockKind k) {
  return k == BlockKind::kChannelAttention || k == BlockKind::kSpatialAttention;
}

Shape stream_shape(Stream s) {
  switch (s) {
    case Stream::kSemg: return {6, 12, 1};
    case Stream::kAcc: return {18, 12, 1};
    case Stream::kFused: return {24, 12, 1};
  }
  return {};
}

namespace {

class GraphBuilder {
 public:
  int input(Stream s) {
    Node n;
    n.op = NodeOp::kInput;
    n.stream = s;
    n.out = stream_shape(s);
    n.branch = std::string(to_string(s));
    return push(std::move(n));
  }

  int block(int from, BlockSpec spec, std::string branch) {
    Node n;
    n.op = NodeOp::kBlock;
    n.inputs = {from};
    n.out = graph_.nodes[from].out;
    if (is_attention(spec.kind)) spec.filters = n.out.c;
    n.out.c = spec.filters;
    n.block = spec;
    n.branch = std::move(branch);
    return push(std::move(n));
  }

  int align(int from) {
    Node n;
    n.op = NodeOp::kAlign;
    n.inputs = {from};
    n.out = {kFusionHeight, kFusionWidth, graph_.nodes[from].out.c};
    n.branch = graph_.nodes[from].branch;
    return push(std::move(n));
  }

  int fuse(int a, int b, int index) {
    Node n;
    n.op = NodeOp::kFuse;
    n.inputs = {a, b};
    n.out = graph_.nodes[a].out;
    n.out.c += graph_.nodes[b].out.c;
    n.fusion_index = index;
    n.branch = index == 1 ? "fusion1" : "fusion2";
    return push(std::move(n));
  }

  int head(int from) {
    Node n;
    n.op = NodeOp::kHead;
    n.inputs = {from};
    n.out = graph_.nodes[from].out;
    n.branch = "head";
    return push(std::move(n));
  }

  ArchGraph& graph() { return graph_; }

 private:
  int push(Node n) {
    graph_.nodes.push_back(std::move(n));
    return static_cast<int>(graph_.nodes.size()) - 1;
  }

  ArchGraph graph_;
};

// Block 1 ordinary conv, blocks 2..depth residual conv.
int build_stem(GraphBuilder& b, Stream s, int depth, const Genome& g,
               int first_gene, const GeneSpace& space) {
  const std::string branch(to_string(s));
  int cur = b.graph().input_node[static_cast<int>(s)];
  for (int i = 0; i < depth; ++i) {
    BlockSpec spec;
    spec.kind = i == 0 ? BlockKind::kOrdinaryConv : BlockKind::kResidualConv;
    spec.filters = space.filters(g[first_gene + i]);
    cur = b.block(cur, spec, branch);
  }
  return b.align(cur);
}

}  // namespace

ArchGraph decode(const Genome& g, const GeneSpace& space) {
  GraphBuilder b;
  ArchGraph& graph = b.graph();
  for (Stream s : {Stream::kSemg, Stream::kAcc, Stream::kFused}) {
    graph.input_node[static_cast<int>(s)] = b.input(s);
  }

  switch (g[gene::kFusionPair]) {
    case 0:
      graph.first_pair = {Stream::kSemg, Stream::kAcc};
      graph.late = Stream::kFused;
      break;
    case 1:
      graph.first_pair = {Stream::kSemg, Stream::kFused};
      graph.late = Stream::kAcc;
      break;
    default:
      graph.first_pair = {Stream::kAcc, Stream::kFused};
      graph.late = Stream::kSemg;
      break;
  }

  const int l1 = g.stem_depth();
  const int l2 = g.trunk_depth();
  const int late_depth = std::min(l1 + l2, 3);

  const bool insert = g[gene::kInsertKind] != 0;
  BlockSpec inserted;
  inserted.kind = g[gene::kInsertKind] == 1 ? BlockKind::kLocalConv
                                            : BlockKind::kLocalResidualConv;
  inserted.filters = space.filters(g[gene::kInsertFilters]);
  inserted.inserted = true;
  const int insert_point = g[gene::kInsertPoint];

  const bool attend = g[gene::kAttentionOn] != 0;
  BlockSpec attention;
  attention.kind = g[gene::kAttentionKind] == 0 ? BlockKind::kChannelAttention
                                                : BlockKind::kSpatialAttention;
  if (attention.kind == BlockKind::kChannelAttention) {
    attention.reduction_ratio = kReductionRatios[g[gene::kReductionIndex]];
  }
  const int slot = g[gene::kAttentionSlot];

  const int a = build_stem(b, graph.first_pair[0], l1, g, gene::kStemAFilters,
                           space);
  const int bb = build_stem(b, graph.first_pair[1], l1, g, gene::kStemBFilters,
                            space);
  graph.fusion1 = b.fuse(a, bb, 1);
  int cur = graph.fusion1;
  if (insert && insert_point == 0) cur = b.block(cur, inserted, "trunk");
  if (attend && slot == 0) cur = b.block(cur, attention, "trunk");

  for (int i = 0; i < l2; ++i) {
    BlockSpec res{BlockKind::kResidualConv, graph.nodes[cur].out.c};
    cur = b.block(cur, res, "trunk");
  }
  if (attend && slot == 2) cur = b.block(cur, attention, "trunk");

  const int late = build_stem(b, graph.late, late_depth, g, gene::kLateFilters,
                              space);
  graph.fusion2 = b.fuse(cur, late, 2);
  cur = graph.fusion2;
  if (insert && insert_point == 1) cur = b.block(cur, inserted, "tail");
  if (attend && slot == 1) cur = b.block(cur, attention, "tail");

  BlockSpec tail_res{BlockKind::kResidualConv, graph.nodes[cur].out.c};
  cur = b.block(cur, tail_res, "tail");
  if (attend && slot == 3) cur = b.block(cur, attention, "tail");

  BlockSpec final_block{BlockKind::kOrdinaryConv,
                        space.filters(g[gene::kFinalFilters])};
  cur = b.block(cur, final_block, "tail");
  graph.head = b.head(cur);
  return graph;
}

int main_path_depth(const ArchGraph& a) {
  // Nodes are topologically ordered, so one forward sweep suffices.
  std::vector<int> depth(a.nodes.size(), 0);
  for (std::size_t i = 0; i < a.nodes.size(); ++i) {
    const Node& n = a.nodes[i];
    int best = 0;
    for (int in : n.inputs) best = std::max(best, depth[in]);
    const bool counted = n.op == NodeOp::kBlock && !n.block.inserted &&
                         !is_attention(n.block.kind);
    depth[i] = best + (counted ? 1 : 0);
  }
  return a.head >= 0 ? depth[a.head] : 0;
}

std::pair<int, int> FusionRatio::reduced() const {
  const int d = std::gcd(first, second);
  if (d == 0) return {first, second};
  return {first / d, second / d};
}

std::string FusionRatio::str() const {
  const auto [x, y] = reduced();
  return std::to_string(x) + ":" + std::to_string(y);
}

std::pair<FusionRatio, FusionRatio> fusion_ratios(const ArchGraph& a) {
  auto ratio = [&](int fuse) {
    const Node& n = a.nodes.at(fuse);
    return FusionRatio{a.nodes[n.inputs[0]].out.c, a.nodes[n.inputs[1]].out.c};
  };
  return {ratio(a.fusion1), ratio(a.fusion2)};
}

void check_invariants(const ArchGraph& a) {
  auto fail = [](const std::string& what) {
    throw std::logic_error("architecture invariant violated: " + what);
  };
  const int count = static_cast<int>(a.nodes.size());
  if (a.head != count - 1) fail("head is not the last node");
  int fusions = 0;
  for (int i = 0; i < count; ++i) {
    const Node& n = a.nodes[i];
    for (int in : n.inputs) {
      if (in < 0 || in >= i) fail("edge not in topological order");
    }
    if (n.out.h <= 0 || n.out.w <= 0 || n.out.c <= 0) fail("empty shape");
    if (n.op == NodeOp::kFuse) {
      ++fusions;
      const Shape& x = a.nodes[n.inputs[0]].out;
      const Shape& y = a.nodes[n.inputs[1]].out;
      if (x.h != y.h || x.w != y.w) fail("fusion inputs not aligned");
      if (n.out.c != x.c + y.c) fail("fusion channels are not summed");
    }
    if (n.op == NodeOp::kBlock && is_attention(n.block.kind) &&
        !(n.out == a.nodes[n.inputs[0]].out)) {
      fail("attention changed shape");
    }
  }
  if (fusions != 2) fail("expected two fusion nodes");

  // Every input must reach the head.
  std::vector<bool> reaches(count, false);
  reaches[a.head] = true;
  for (int i = count - 1; i >= 0; --i) {
    if (!reaches[i]) continue;
    for (int in : a.nodes[i].inputs) reaches[in] = true;
  }
  for (int id : a.input_node) {
    if (!reaches[id]) fail("input does not reach the classifier");
  }

  auto stream_of = [&](int fuse_input) {
    int cur = fuse_input;
    while (a.nodes[cur].op != NodeOp::kInput) {
      if (a.nodes[cur].inputs.size() != 1) return -1;
      cur = a.nodes[cur].inputs[0];
    }
    return static_cast<int>(a.nodes[cur].stream);
  };
  const Node& f1 = a.nodes[a.fusion1];
  if (stream_of(f1.inputs[0]) != static_cast<int>(a.first_pair[0]) ||
      stream_of(f1.inputs[1]) != static_cast<int>(a.first_pair[1])) {
    fail("fusion1 does not merge the encoded pair");
  }
  const Node& f2 = a.nodes[a.fusion2];
  if (stream_of(f2.inputs[1]) != static_cast<int>(a.late)) {
    fail("fusion2 does not merge the late stream");
  }

  const int depth = main_path_depth(a);
  if (depth < 4 || depth > 6) fail("main-path depth outside [4,6]");
}

std::string summarize(const ArchGraph& a) {
  std::ostringstream out;
  out << "depth " << main_path_depth(a) << '\n';
  const auto ratios = fusion_ratios(a);
  int index = 0;
  for (const Node& n : a.nodes) {
    if (n.op == NodeOp::kBlock) {
      out << index++ << ' ' << to_string(n.block.kind) << " @"
          << n.block.filters;
      if (n.block.reduction_ratio > 0) out << " r" << n.block.reduction_ratio;
      out << " [" << n.branch << "]\n";
    } else if (n.op == NodeOp::kFuse) {
      const FusionRatio& r = n.fusion_index == 1 ? ratios.first : ratios.second;
      const Node& x = a.nodes[n.inputs[0]];
      const Node& y = a.nodes[n.inputs[1]];
      out << "fusion" << n.fusion_index << ' ' << x.branch << '+' << y.branch
          << ' ' << r.first << ':' << r.second << " ratio " << r.str() << '\n';
    } else if (n.op == NodeOp::kHead) {
      out << "head gap dense softmax\n";
    }
  }
  return out.str();
}

}  // namespace fusenas
