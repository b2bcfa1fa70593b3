// Copyright 2026 The capgen Authors
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

#pragma once

#include <vector>

#include "capgen/metrics/token.hpp"

namespace capgen::metrics {

struct MeteorParams {
  double alpha = 0.9;          // precision/recall balance in the f-mean
  double beta = 3.0;           // fragmentation penalty exponent
  double gamma = 0.5;          // fragmentation penalty weight
  bool enable_stemming = true; // second matching stage on Porter stems
};

struct AlignedPair {
  int hyp_index;
  int ref_index;
  bool stem_match;  // false: exact surface match
};

/// Unigram alignment between hypothesis and reference. Matching runs in two
/// stages, exact surfaces first and Porter stems on the leftovers; each stage
/// matches as many tokens as possible. Among those maximal matchings the one
/// with the fewest chunks is returned, ties broken by the lexicographically
/// smallest (hyp_index, ref_index) pair list.
struct Alignment {
  int matches = 0;
  int chunks = 0;  // maximal runs of pairs consecutive on both sides
  std::vector<AlignedPair> pairs;
};

Alignment align(const std::vector<Token>& hyp, const std::vector<Token>& ref,
                const MeteorParams& params = {});

struct MeteorScore {
  double value = 0.0;  // fmean * (1 - penalty), in [0, 1]
  double precision = 0.0;
  double recall = 0.0;
  double fmean = 0.0;
  double penalty = 0.0;
};

/// Zero when either side is empty or nothing matches.
MeteorScore meteor_score(const std::vector<Token>& hyp, const std::vector<Token>& ref,
                         const MeteorParams& params = {});

}  // namespace capgen::metrics
