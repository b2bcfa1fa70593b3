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

#include "capgen/diff/graph.hpp"
#include "capgen/signal/signal.hpp"

namespace capgen::signal {

/// Differentiable versions of the sequence losses, built on top of a
/// [T x vocab] log-probability node. Forward values agree with the plain
/// functions in signal.hpp; gradients flow through the model's own
/// probability of the sampled token (the advantage path) as well as the KL.

diff::Var label_smoothed_kl_node(diff::Graph& g, diff::Var log_probs,
                                 const std::vector<int>& gt, const SignalConfig& cfg);

diff::Var biased_loss_node(diff::Graph& g, diff::Var log_probs, const std::vector<int>& gt,
                           const std::vector<int>& sampled, const std::vector<double>& rewards,
                           const std::vector<double>& baselines, const SignalConfig& cfg);

diff::Var weighted_loss_node(diff::Graph& g, diff::Var log_probs, const std::vector<int>& gt,
                             const std::vector<int>& sampled, const std::vector<double>& rewards,
                             const std::vector<double>& baselines, const SignalConfig& cfg,
                             double norm_const);

}  // namespace capgen::signal
