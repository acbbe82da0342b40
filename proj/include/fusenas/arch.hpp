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

#ifndef FUSENAS_ARCH_HPP_
#define FUSENAS_ARCH_HPP_

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "fusenas/genome.hpp"

namespace fusenas {

enum class Stream { kSemg = 0, kAcc = 1, kFused = 2 };

enum class BlockKind {
  kOrdinaryConv,
  kResidualConv,
  kLocalConv,
  kLocalResidualConv,
  kChannelAttention,
  kSpatialAttention,
};

inline constexpr std::array<BlockKind, 6> kAllBlockKinds = {
    BlockKind::kOrdinaryConv,     BlockKind::kResidualConv,
    BlockKind::kLocalConv,        BlockKind::kLocalResidualConv,
    BlockKind::kChannelAttention, BlockKind::kSpatialAttention};

std::string_view to_string(Stream s);
std::string_view to_string(BlockKind k);

bool is_attention(BlockKind k);

/// Height x width x channels of one sample.
struct Shape {
  int h = 0;
  int w = 0;
  int c = 0;
  int sites() const { return h * w; }
  friend bool operator==(const Shape&, const Shape&) = default;
};

/// Input shape of each stream: sEMG 6x12, ACC 18x12, fused 24x12, one channel.
Shape stream_shape(Stream s);

/// Grid every stream is pooled to before concatenation.
inline constexpr int kFusionHeight = 6;
inline constexpr int kFusionWidth = 12;

struct BlockSpec {
  BlockKind kind = BlockKind::kOrdinaryConv;
  // Output channels. Attention blocks preserve channels, so this equals the
  // input channel count for them.
  int filters = 0;
  // Channel attention only.
  int reduction_ratio = 0;
  // True for the optional local block; excluded from main-path depth.
  bool inserted = false;
  friend bool operator==(const BlockSpec&, const BlockSpec&) = default;
};

enum class NodeOp { kInput, kBlock, kAlign, kFuse, kHead };

struct Node {
  NodeOp op = NodeOp::kInput;
  std::vector<int> inputs;
  Shape out;
  BlockSpec block;           // kBlock
  Stream stream{};           // kInput
  std::string branch;        // semg / acc / fused / trunk / tail
  int fusion_index = 0;      // kFuse: 1 or 2
  friend bool operator==(const Node&, const Node&) = default;
};

/// Decoded architecture as a topologically ordered node list.
struct ArchGraph {
  std::vector<Node> nodes;
  std::array<int, 3> input_node{};  // indexed by Stream
  int fusion1 = -1;
  int fusion2 = -1;
  int head = -1;
  std::array<Stream, 2> first_pair{};
  Stream late{};
  friend bool operator==(const ArchGraph&, const ArchGraph&) = default;
};

ArchGraph decode(const Genome& g, const GeneSpace& space);

/// Longest input-to-head path counted in non-attention, non-inserted blocks.
int main_path_depth(const ArchGraph& a);

struct FusionRatio {
  int first = 0;   // channels on the first incoming edge
  int second = 0;  // channels on the second incoming edge
  /// Reduced by the greatest common divisor, e.g. 16:48 -> 1:3.
  std::pair<int, int> reduced() const;
  std::string str() const;
};

std::pair<FusionRatio, FusionRatio> fusion_ratios(const ArchGraph& a);

/// Throws std::logic_error when a structural invariant does not hold.
void check_invariants(const ArchGraph& a);

/// One line per block (`index kind @filters [branch]`), one per fusion node.
std::string summarize(const ArchGraph& a);

}  // namespace fusenas

#endif  // FUSENAS_ARCH_HPP_
