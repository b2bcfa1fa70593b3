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

#include "capgen/rewards/rewards.hpp"

#include <algorithm>
#include <stdexcept>

namespace capgen::rewards {

void SegmentBoundaries::validate(int caption_length) const {
  if (starts.empty()) throw std::invalid_argument("SegmentBoundaries: empty start list");
  if (starts.front() != 0) throw std::invalid_argument("SegmentBoundaries: first start must be 0");
  for (size_t i = 0; i < starts.size(); ++i) {
    if (starts[i] < 0 || starts[i] >= caption_length)
      throw std::invalid_argument("SegmentBoundaries: start index out of range");
    if (i > 0 && starts[i] <= starts[i - 1])
      throw std::invalid_argument("SegmentBoundaries: starts must be strictly increasing");
  }
}

bool CriticRule::is_delimiter(const metrics::Token& t) const {
  return std::find(delimiters.begin(), delimiters.end(), t) != delimiters.end();
}

DeltaTrace delta_meteor_trace(const std::vector<metrics::Token>& pred,
                              const std::vector<metrics::Token>& ref,
                              const metrics::MeteorParams& params) {
  if (pred.empty()) throw std::invalid_argument("delta_meteor_trace: empty prediction");
  DeltaTrace trace;
  trace.deltas.resize(pred.size());
  double prev = 0.0;
  std::vector<metrics::Token> prefix;
  prefix.reserve(pred.size());
  for (size_t t = 0; t < pred.size(); ++t) {
    prefix.push_back(pred[t]);
    const double score = metrics::meteor_score(prefix, ref, params).value;
    trace.deltas[t] = score - prev;
    prev = score;
  }
  trace.full_score = prev;
  return trace;
}

std::vector<double> worker_rewards(const DeltaTrace& trace, double gamma_worker) {
  if (gamma_worker < 0.0 || gamma_worker > 1.0)
    throw std::invalid_argument("worker_rewards: gamma must lie in [0,1]");
  std::vector<double> rewards(trace.deltas.size(), 0.0);
  double suffix = 0.0;
  for (size_t t = trace.deltas.size(); t-- > 0;) {
    suffix = trace.deltas[t] + gamma_worker * suffix;
    rewards[t] = suffix;
  }
  return rewards;
}

std::vector<double> manager_rewards(const DeltaTrace& trace, const SegmentBoundaries& bounds,
                                    double gamma_manager) {
  const int n = static_cast<int>(trace.deltas.size());
  bounds.validate(n);
  std::vector<double> rewards(trace.deltas.size(), 0.0);
  double next_segment = 0.0;
  for (size_t k = bounds.starts.size(); k-- > 0;) {
    const int begin = bounds.starts[k];
    const int end = (k + 1 < bounds.starts.size()) ? bounds.starts[k + 1] : n;
    double seg = 0.0;
    for (int j = begin; j < end; ++j) seg += trace.deltas[static_cast<size_t>(j)];
    const double r = (k + 1 < bounds.starts.size()) ? seg + gamma_manager * next_segment : seg;
    rewards[static_cast<size_t>(begin)] = r;
    next_segment = r;
  }
  return rewards;
}

RewardTrace compute_reward_trace(const DeltaTrace& trace, const SegmentBoundaries& bounds,
                                 double gamma_worker, double gamma_manager) {
  RewardTrace out;
  out.worker = worker_rewards(trace, gamma_worker);
  out.manager = manager_rewards(trace, bounds, gamma_manager);
  out.gamma_worker = gamma_worker;
  out.gamma_manager = gamma_manager;
  return out;
}

SegmentBoundaries critic_boundaries(const std::vector<metrics::Token>& tokens,
                                    const CriticRule& critic) {
  if (tokens.empty()) throw std::invalid_argument("critic_boundaries: empty token sequence");
  SegmentBoundaries bounds;
  bounds.starts.push_back(0);
  for (size_t i = 0; i + 1 < tokens.size(); ++i)
    if (critic.is_delimiter(tokens[i]))
      bounds.starts.push_back(static_cast<int>(i) + 1);
  return bounds;
}

}  // namespace capgen::rewards
