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

// Fixed-length architecture genome and its genetic operators.
//
// Gene layout (0-based index / role):
//   0      stem depth L1 (blocks before fusion 1), {1,2,3}
//   1      trunk depth L2 (blocks between the fusions), {1,2}
//   2      first fused pair: 0 (sEMG,ACC), 1 (sEMG,fused), 2 (ACC,fused)
//   3-5    filter indices, stem of first stream of the pair
//   6-8    filter indices, stem of second stream of the pair
//   9-11   filter indices, stem of the late stream
//   12     inserted block: 0 none, 1 local conv, 2 local residual conv
//   13     fusion point the inserted block follows (0 fusion1, 1 fusion2)
//   14     filter index of the inserted block
//   15     attention enabled
//   16     attention kind: 0 channel, 1 spatial
//   17     attention slot: after fusion1 / after fusion2 / after trunk /
//          before the final block
//   18     channel-attention reduction ratio index into {2,4,8,16}
//   19     filter index of the final block
//
// After repair, L1 + L2 + 2 lies in [4, 6].

#ifndef FUSENAS_GENOME_HPP_
#define FUSENAS_GENOME_HPP_

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <utility>

namespace fusenas {

inline constexpr int kGenomeLength = 20;
inline constexpr int kNumCandidateFilters = 10;

/// Deterministic generator used throughout the library.
using Rng = std::mt19937_64;

namespace gene {
inline constexpr int kStemDepth = 0;
inline constexpr int kTrunkDepth = 1;
inline constexpr int kFusionPair = 2;
inline constexpr int kStemAFilters = 3;
inline constexpr int kStemBFilters = 6;
inline constexpr int kLateFilters = 9;
inline constexpr int kInsertKind = 12;
inline constexpr int kInsertPoint = 13;
inline constexpr int kInsertFilters = 14;
inline constexpr int kAttentionOn = 15;
inline constexpr int kAttentionKind = 16;
inline constexpr int kAttentionSlot = 17;
inline constexpr int kReductionIndex = 18;
inline constexpr int kFinalFilters = 19;
}  // namespace gene

inline constexpr std::array<int, 4> kReductionRatios = {2, 4, 8, 16};

struct GeneRange {
  int lo = 0;
  int hi = 0;
  int span() const { return hi - lo; }
  bool contains(int v) const { return v >= lo && v <= hi; }
};

/// Per-position candidate ranges plus the shared candidate filter list.
struct GeneSpace {
  std::array<GeneRange, kGenomeLength> ranges;
  std::array<int, kNumCandidateFilters> candidate_filters;

  /// Default ranges with filters {8,16,24,32,48,64,96,128,192,256}.
  static GeneSpace Default();
  static GeneSpace WithFilters(const std::array<int, kNumCandidateFilters>& f);

  /// Throws ConfigError when a range is empty or the filter list is not
  /// strictly increasing and positive.
  void validate() const;

  int filters(int index) const { return candidate_filters.at(index); }
};

struct Genome {
  std::array<int, kGenomeLength> genes{};

  int operator[](int i) const { return genes[i]; }
  int& operator[](int i) { return genes[i]; }

  int stem_depth() const { return genes[gene::kStemDepth]; }
  int trunk_depth() const { return genes[gene::kTrunkDepth]; }
  int main_path_depth() const { return stem_depth() + trunk_depth() + 2; }

  friend bool operator==(const Genome&, const Genome&) = default;
  friend auto operator<=>(const Genome&, const Genome&) = default;
};

/// Range check only. Throws RangeError naming the offending position.
void check_ranges(const Genome& g, const GeneSpace& space);

/// Range check plus the depth constraint; throws RangeError.
void validate(const Genome& g, const GeneSpace& space);

/// Clamps the trunk depth so that L1 + L2 <= 4. Throws RangeError on
/// out-of-range input.
Genome repair(Genome g, const GeneSpace& space);

Genome random_genome(const GeneSpace& space, Rng& rng);

/// Single-point crossover at a fixed cut: child1 takes genes [0, cut) from
/// a and [cut, 20) from b; child2 is symmetric. cut must lie in [1, 19].
/// Children are not repaired.
std::pair<Genome, Genome> crossover_at(const Genome& a, const Genome& b,
                                       int cut);

/// With probability rate, crosses at a uniform cut in [1, 19]; otherwise
/// copies. Children are repaired.
std::pair<Genome, Genome> crossover(const Genome& a, const Genome& b,
                                    double rate, const GeneSpace& space,
                                    Rng& rng);

/// With probability rate, resamples one uniformly chosen position within
/// its range. Result is repaired.
Genome mutate(const Genome& g, double rate, const GeneSpace& space, Rng& rng);

/// 20 comma-separated decimal integers, no whitespace.
std::string serialize(const Genome& g);

/// Parses and validates against space. Throws ConfigError on a wrong count
/// or a non-integer token and RangeError on an out-of-range gene.
Genome deserialize(std::string_view text, const GeneSpace& space);

/// Depth-4 genome used as the hand-designed reference network:
/// "1,1,0,1,1,1,1,1,1,1,1,1,0,0,0,0,0,0,0,1".
Genome reference_genome();

}  // namespace fusenas

#endif  // FUSENAS_GENOME_HPP_
