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

#include "fusenas/genome.hpp"

#include <algorithm>
#include <charconv>
#include <string>

#include "fusenas/error.hpp"

namespace fusenas {

namespace {

constexpr std::array<int, kNumCandidateFilters> kDefaultFilters = {
    8, 16, 24, 32, 48, 64, 96, 128, 192, 256};

bool draw(double rate, Rng& rng) {
  if (rate <= 0.0) return false;
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < rate;
}

int sample_gene(const GeneRange& r, Rng& rng) {
  return std::uniform_int_distribution<int>(r.lo, r.hi)(rng);
}

}  // namespace

GeneSpace GeneSpace::Default() { return WithFilters(kDefaultFilters); }

GeneSpace GeneSpace::WithFilters(
    const std::array<int, kNumCandidateFilters>& f) {
  GeneSpace s;
  const GeneRange filter_idx{0, kNumCandidateFilters - 1};
  s.ranges = {GeneRange{1, 3}, GeneRange{1, 2}, GeneRange{0, 2},
              filter_idx,      filter_idx,      filter_idx,
              filter_idx,      filter_idx,      filter_idx,
              filter_idx,      filter_idx,      filter_idx,
              GeneRange{0, 2}, GeneRange{0, 1}, filter_idx,
              GeneRange{0, 1}, GeneRange{0, 1}, GeneRange{0, 3},
              GeneRange{0, 3}, filter_idx};
  s.candidate_filters = f;
  s.validate();
  return s;
}

void GeneSpace::validate() const {
  for (int i = 0; i < kGenomeLength; ++i) {
    if (ranges[i].hi < ranges[i].lo) {
      throw ConfigError("gene range " + std::to_string(i + 1) + " is empty");
    }
  }
  for (int i = 0; i < kNumCandidateFilters; ++i) {
    if (candidate_filters[i] <= 0) {
      throw ConfigError("candidate filters must be positive");
    }
    if (i > 0 && candidate_filters[i] <= candidate_filters[i - 1]) {
      throw ConfigError("candidate filters must be strictly increasing");
    }
  }
}

void check_ranges(const Genome& g, const GeneSpace& space) {
  for (int i = 0; i < kGenomeLength; ++i) {
    const GeneRange& r = space.ranges[i];
    if (!r.contains(g[i])) {
      throw RangeError("gene " + std::to_string(i + 1) + " = " +
                       std::to_string(g[i]) + " outside [" +
                       std::to_string(r.lo) + "," + std::to_string(r.hi) +
                       "]");
    }
  }
}

void validate(const Genome& g, const GeneSpace& space) {
  check_ranges(g, space);
  const int depth = g.main_path_depth();
  if (depth < 4 || depth > 6) {
    throw RangeError("main-path depth " + std::to_string(depth) +
                     " outside [4,6]");
  }
}

Genome repair(Genome g, const GeneSpace& space) {
  check_ranges(g, space);
  g[gene::kTrunkDepth] = std::min(g[gene::kTrunkDepth], 4 - g.stem_depth());
  return g;
}

Genome random_genome(const GeneSpace& space, Rng& rng) {
  Genome g;
  for (int i = 0; i < kGenomeLength; ++i) g[i] = sample_gene(space.ranges[i], rng);
  return repair(g, space);
}

std::pair<Genome, Genome> crossover_at(const Genome& a, const Genome& b,
                                       int cut) {
  if (cut < 1 || cut > kGenomeLength - 1) {
    throw ConfigError("crossover cut " + std::to_string(cut) +
                      " outside [1,19]");
  }
  Genome c1 = a;
  Genome c2 = b;
  for (int i = cut; i < kGenomeLength; ++i) {
    c1[i] = b[i];
    c2[i] = a[i];
  }
  return {c1, c2};
}

std::pair<Genome, Genome> crossover(const Genome& a, const Genome& b,
                                    double rate, const GeneSpace& space,
                                    Rng& rng) {
  if (!draw(rate, rng)) return {a, b};
  const int cut = std::uniform_int_distribution<int>(1, kGenomeLength - 1)(rng);
  auto [c1, c2] = crossover_at(a, b, cut);
  return {repair(c1, space), repair(c2, space)};
}

Genome mutate(const Genome& g, double rate, const GeneSpace& space, Rng& rng) {
  if (!draw(rate, rng)) return g;
  Genome out = g;
  const int pos = std::uniform_int_distribution<int>(0, kGenomeLength - 1)(rng);
  out[pos] = sample_gene(space.ranges[pos], rng);
  return repair(out, space);
}

std::string serialize(const Genome& g) {
  std::string s;
  for (int i = 0; i < kGenomeLength; ++i) {
    if (i > 0) s += ',';
    s += std::to_string(g[i]);
  }
  return s;
}

Genome deserialize(std::string_view text, const GeneSpace& space) {
  Genome g;
  int count = 0;
  std::size_t pos = 0;
  while (true) {
    const std::size_t comma = text.find(',', pos);
    const std::string_view tok = text.substr(
        pos, comma == std::string_view::npos ? std::string_view::npos
                                             : comma - pos);
    int value = 0;
    const auto [end, ec] =
        std::from_chars(tok.data(), tok.data() + tok.size(), value);
    if (tok.empty() || ec != std::errc() || end != tok.data() + tok.size()) {
      throw ConfigError("genome token '" + std::string(tok) +
                        "' is not an integer");
    }
    if (count < kGenomeLength) g[count] = value;
    ++count;
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  if (count != kGenomeLength) {
    throw ConfigError("genome has " + std::to_string(count) +
                      " genes, expected 20");
  }
  validate(g, space);
  return g;
}

Genome reference_genome() {
  return Genome{{1, 1, 0, 1, 1, 1, 1, 1, 1, 1, 1, 1, 0, 0, 0, 0, 0, 0, 0, 1}};
}

}  // namespace fusenas
