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

#include "capgen/metrics/meteor.hpp"
#include "capgen/metrics/token.hpp"

namespace capgen::rewards {

/// Per-timestep change of the prefix METEOR score. The prefix sums
/// reconstruct the prefix scores exactly (telescoping), and the total equals
/// the full-sequence score.
struct DeltaTrace {
  std::vector<double> deltas;
  double full_score = 0.0;
};

/// Segment start indices: non-empty, strictly increasing, first element 0,
/// all within [0, caption_length). The segment starting at starts[i] ends
/// right before starts[i+1] (or at the caption end).
struct SegmentBoundaries {
  std::vector<int> starts;
  void validate(int caption_length) const;
};

/// Both reward streams for one prediction, plus the discounts they used.
struct RewardTrace {
  std::vector<double> worker;
  std::vector<double> manager;
  double gamma_worker = 0.0;
  double gamma_manager = 0.0;
};

/// Clause segmentation rule: a new segment starts at index 0 and right after
/// every delimiter token.
struct CriticRule {
  std::vector<metrics::Token> delimiters;
  bool is_delimiter(const metrics::Token& t) const;
};

/// deltas[0] = meteor(first token, ref); deltas[t] = prefix score difference.
/// Deltas may be negative. Throws on an empty prediction.
DeltaTrace delta_meteor_trace(const std::vector<metrics::Token>& pred,
                              const std::vector<metrics::Token>& ref,
                              const metrics::MeteorParams& params = {});

/// R_W(t) = sum_{j>=t} deltas[j] * gamma^(j-t). Throws unless gamma in [0,1].
std::vector<double> worker_rewards(const DeltaTrace& trace, double gamma_worker);

/// Segment-recursive reward: the entry at a segment start k holds the
/// undiscounted delta sum of that segment plus gamma_manager times the next
/// segment's reward; entries off segment starts are 0.
std::vector<double> manager_rewards(const DeltaTrace& trace, const SegmentBoundaries& bounds,
                                    double gamma_manager);

RewardTrace compute_reward_trace(const DeltaTrace& trace, const SegmentBoundaries& bounds,
                                 double gamma_worker, double gamma_manager);

/// Rule-based critic: throws on empty input; a trailing delimiter does not
/// open an empty segment.
SegmentBoundaries critic_boundaries(const std::vector<metrics::Token>& tokens,
                                    const CriticRule& critic);

}  // namespace capgen::rewards
