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

#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace capgen::signal {

/// Probability vector over the vocabulary. In normalized mode it sums to 1;
/// in literal mode the off-target denominator is vocab_size - 2 and the sum
/// may deviate from 1.
using ProbDist = std::vector<double>;

struct SignalConfig {
  double label_smoothing = 0.3;  // mass kept on the ground-truth token
  double c_smooth = 0.3;         // smoothing constant of the sampled-token cell
  int vocab_size = 0;
  bool literal_denominator = false;  // vocab-2 off-target denominator
  bool renormalize_rs = false;       // renormalize the scaled target before the KL
  std::optional<std::pair<double, double>> eta_clamp;
  int length_scale = 1;  // L_C, the ground-truth caption length of the sample
  int pad_id = 0;

  void validate() const;
};

/// Spike distribution: mass LS on the target token, the rest spread evenly.
ProbDist label_smoothed(int y, const SignalConfig& cfg);

/// eta_t = (reward - baseline) * length_scale * p_sampled, optionally clamped.
double advantage(double reward, double baseline, int length_scale, double p_sampled,
                 const SignalConfig& cfg);

/// Shifts mass from the ground-truth cell toward the sampled token:
/// d(y) = (1-eta) d_ls(y), d(y_hat) = eta (1-c_smooth), every other cell kept.
/// Cells are floored at 0. When y_hat == y the input is returned unchanged.
ProbDist reward_scaled(const ProbDist& d_ls, int y, int y_hat, double eta,
                       const SignalConfig& cfg);

/// KL(target || model) with 0 log 0 := 0 on the target side and the model
/// floored at 1e-12. Throws on negative or non-finite model entries.
double kl_divergence(const ProbDist& target, const ProbDist& model);

/// Mean over non-pad timesteps of KL(label_smoothed(gt_t) || model_t); the
/// plain supervised objective.
double label_smoothed_kl_loss(const std::vector<ProbDist>& model_dists,
                              const std::vector<int>& gt, const SignalConfig& cfg);

/// Mean over non-pad timesteps of KL(reward_scaled target || model_t), with
/// eta_t derived from the timestep's reward, baseline and the model's own
/// probability of the sampled token.
double biased_sequence_loss(const std::vector<ProbDist>& model_dists, const std::vector<int>& gt,
                            const std::vector<int>& sampled, const std::vector<double>& rewards,
                            const std::vector<double>& baselines, const SignalConfig& cfg);

/// Inverse-advantage variant: (1 - clamp(eta_t, 0, 1)) * norm_const *
/// KL(label_smoothed || model_t), averaged over non-pad timesteps.
double weighted_sequence_loss(const std::vector<ProbDist>& model_dists, const std::vector<int>& gt,
                              const std::vector<int>& sampled, const std::vector<double>& rewards,
                              const std::vector<double>& baselines, const SignalConfig& cfg,
                              double norm_const);

/// Linear per-timestep reward estimate b(feature), trained by SGD on the
/// mean squared error against observed rewards.
struct Baseline {
  std::vector<double> weights;
  double bias = 0.0;
  double learning_rate = 0.01;

  double value(std::span<const double> feature) const;
};

/// One gradient step on 1/T sum_t (b(x_t) - r_t)^2.
void baseline_update(Baseline& baseline, const std::vector<std::vector<double>>& features,
                     const std::vector<double>& rewards);

}  // namespace capgen::signal
