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

#include "capgen/signal/signal.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace capgen::signal {

void SignalConfig::validate() const {
  if (!(label_smoothing > 0.0 && label_smoothing < 1.0))
    throw std::invalid_argument("SignalConfig: label_smoothing must lie in (0,1)");
  if (!(c_smooth >= 0.0 && c_smooth < 1.0))
    throw std::invalid_argument("SignalConfig: c_smooth must lie in [0,1)");
  if (vocab_size < 3) throw std::invalid_argument("SignalConfig: vocab_size must be at least 3");
  if (length_scale < 1) throw std::invalid_argument("SignalConfig: length_scale must be positive");
  if (eta_clamp && eta_clamp->first > eta_clamp->second)
    throw std::invalid_argument("SignalConfig: empty eta clamp interval");
}

ProbDist label_smoothed(int y, const SignalConfig& cfg) {
  cfg.validate();
  if (y < 0 || y >= cfg.vocab_size)
    throw std::invalid_argument("label_smoothed: token id out of range");
  if (cfg.literal_denominator && cfg.vocab_size <= 2)
    throw std::invalid_argument("label_smoothed: literal mode needs vocab_size > 2");
  const double denom =
      static_cast<double>(cfg.vocab_size - (cfg.literal_denominator ? 2 : 1));
  const double off = (1.0 - cfg.label_smoothing) / denom;
  ProbDist d(static_cast<size_t>(cfg.vocab_size), off);
  d[static_cast<size_t>(y)] = cfg.label_smoothing;
  return d;
}

double advantage(double reward, double baseline, int length_scale, double p_sampled,
                 const SignalConfig& cfg) {
  if (p_sampled < 0.0 || p_sampled > 1.0)
    throw std::invalid_argument("advantage: p_sampled must lie in [0,1]");
  double eta = (reward - baseline) * static_cast<double>(length_scale) * p_sampled;
  if (cfg.eta_clamp) eta = std::min(cfg.eta_clamp->second, std::max(cfg.eta_clamp->first, eta));
  return eta;
}

ProbDist reward_scaled(const ProbDist& d_ls, int y, int y_hat, double eta,
                       const SignalConfig& cfg) {
  if (y < 0 || y >= static_cast<int>(d_ls.size()) || y_hat < 0 ||
      y_hat >= static_cast<int>(d_ls.size()))
    throw std::invalid_argument("reward_scaled: token id out of range");
  if (y_hat == y) return d_ls;
  ProbDist d = d_ls;
  d[static_cast<size_t>(y)] = std::max(0.0, (1.0 - eta) * d_ls[static_cast<size_t>(y)]);
  d[static_cast<size_t>(y_hat)] = std::max(0.0, eta * (1.0 - cfg.c_smooth));
  return d;
}

double kl_divergence(const ProbDist& target, const ProbDist& model) {
  if (target.size() != model.size())
    throw std::invalid_argument("kl_divergence: size mismatch");
  double acc = 0.0;
  for (size_t w = 0; w < target.size(); ++w) {
    const double m = model[w];
    if (!(m >= 0.0) || !std::isfinite(m))
      throw std::invalid_argument("kl_divergence: model entries must be non-negative and finite");
    const double t = target[w];
    if (t < 0.0) throw std::invalid_argument("kl_divergence: negative target entry");
    if (t == 0.0) continue;  // 0 log 0 := 0
    acc += t * (std::log(t) - std::log(std::max(m, 1e-12)));
  }
  return acc;
}

namespace {

void check_lengths(size_t dists, size_t gt, size_t sampled, size_t rewards, size_t baselines) {
  if (dists != gt || gt != sampled || sampled != rewards || rewards != baselines)
    throw std::invalid_argument("sequence loss: input lists must share one length");
}

void renormalize(ProbDist& d) {
  double z = 0.0;
  for (double v : d) z += v;
  if (z <= 0.0) throw std::invalid_argument("renormalize: non-positive total mass");
  for (double& v : d) v /= z;
}

}  // namespace

double label_smoothed_kl_loss(const std::vector<ProbDist>& model_dists,
                              const std::vector<int>& gt, const SignalConfig& cfg) {
  if (model_dists.size() != gt.size())
    throw std::invalid_argument("label_smoothed_kl_loss: length mismatch");
  double acc = 0.0;
  int counted = 0;
  for (size_t t = 0; t < gt.size(); ++t) {
    if (gt[t] == cfg.pad_id) continue;
    ProbDist d = label_smoothed(gt[t], cfg);
    if (cfg.renormalize_rs) renormalize(d);
    acc += kl_divergence(d, model_dists[t]);
    ++counted;
  }
  return counted ? acc / counted : 0.0;
}

double biased_sequence_loss(const std::vector<ProbDist>& model_dists, const std::vector<int>& gt,
                            const std::vector<int>& sampled, const std::vector<double>& rewards,
                            const std::vector<double>& baselines, const SignalConfig& cfg) {
  check_lengths(model_dists.size(), gt.size(), sampled.size(), rewards.size(), baselines.size());
  double acc = 0.0;
  int counted = 0;
  for (size_t t = 0; t < gt.size(); ++t) {
    if (gt[t] == cfg.pad_id) continue;
    const ProbDist d_ls = label_smoothed(gt[t], cfg);
    ProbDist d_rs;
    if (sampled[t] == gt[t]) {
      d_rs = d_ls;
    } else {
      const double p_hat = model_dists[t][static_cast<size_t>(sampled[t])];
      const double eta = advantage(rewards[t], baselines[t], cfg.length_scale, p_hat, cfg);
      d_rs = reward_scaled(d_ls, gt[t], sampled[t], eta, cfg);
    }
    if (cfg.renormalize_rs) renormalize(d_rs);
    acc += kl_divergence(d_rs, model_dists[t]);
    ++counted;
  }
  return counted ? acc / counted : 0.0;
}

double weighted_sequence_loss(const std::vector<ProbDist>& model_dists, const std::vector<int>& gt,
                              const std::vector<int>& sampled, const std::vector<double>& rewards,
                              const std::vector<double>& baselines, const SignalConfig& cfg,
                              double norm_const) {
  check_lengths(model_dists.size(), gt.size(), sampled.size(), rewards.size(), baselines.size());
  if (!(norm_const > 0.0))
    throw std::invalid_argument("weighted_sequence_loss: norm_const must be positive");
  double acc = 0.0;
  int counted = 0;
  for (size_t t = 0; t < gt.size(); ++t) {
    if (gt[t] == cfg.pad_id) continue;
    const double p_hat = model_dists[t][static_cast<size_t>(sampled[t])];
    const double eta = advantage(rewards[t], baselines[t], cfg.length_scale, p_hat, cfg);
    const double inv = 1.0 - std::min(1.0, std::max(0.0, eta));
    ProbDist d = label_smoothed(gt[t], cfg);
    if (cfg.renormalize_rs) renormalize(d);
    acc += inv * norm_const * kl_divergence(d, model_dists[t]);
    ++counted;
  }
  return counted ? acc / counted : 0.0;
}

double Baseline::value(std::span<const double> feature) const {
  if (feature.size() != weights.size())
    throw std::invalid_argument("Baseline: feature width mismatch");
  double acc = bias;
  for (size_t i = 0; i < weights.size(); ++i) acc += weights[i] * feature[i];
  return acc;
}

void baseline_update(Baseline& baseline, const std::vector<std::vector<double>>& features,
                     const std::vector<double>& rewards) {
  if (features.size() != rewards.size())
    throw std::invalid_argument("baseline_update: length mismatch");
  if (features.empty()) return;
  const double inv = 2.0 / static_cast<double>(features.size());
  std::vector<double> grad_w(baseline.weights.size(), 0.0);
  double grad_b = 0.0;
  for (size_t t = 0; t < features.size(); ++t) {
    const double err = baseline.value(features[t]) - rewards[t];
    for (size_t i = 0; i < grad_w.size(); ++i) grad_w[i] += inv * err * features[t][i];
    grad_b += inv * err;
  }
  for (size_t i = 0; i < grad_w.size(); ++i) baseline.weights[i] -= baseline.learning_rate * grad_w[i];
  baseline.bias -= baseline.learning_rate * grad_b;
}

}  // namespace capgen::signal
