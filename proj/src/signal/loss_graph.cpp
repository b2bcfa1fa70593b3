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

#include "capgen/signal/loss_graph.hpp"

#include <cmath>
#include <stdexcept>

namespace capgen::signal {

namespace {

using diff::Graph;
using diff::Var;

double entropy_term(const ProbDist& d) {
  double acc = 0.0;
  for (double v : d)
    if (v > 0.0) acc += v * std::log(v);
  return acc;
}

void check_log_probs(Graph& g, Var log_probs, size_t steps, const SignalConfig& cfg) {
  if (g.value(log_probs).rows() != static_cast<int>(steps) ||
      g.value(log_probs).cols() != cfg.vocab_size)
    throw std::invalid_argument("loss node: log_probs shape does not match inputs");
}

/// KL of a fixed target distribution against log-prob row t.
Var fixed_target_kl(Graph& g, Var log_probs, int t, const ProbDist& d) {
  return g.add_scalar(g.scale(g.dot_row_const(log_probs, t, d), -1.0), entropy_term(d));
}

Var mean_of(Graph& g, const std::vector<Var>& terms) {
  if (terms.empty()) return g.constant_scalar(0.0);
  Var acc = terms[0];
  for (size_t i = 1; i < terms.size(); ++i) acc = g.add(acc, terms[i]);
  return g.scale(acc, 1.0 / static_cast<double>(terms.size()));
}

Var eta_node(Graph& g, Var log_probs, int t, int y_hat, double reward, double baseline,
             const SignalConfig& cfg) {
  const Var p_hat = g.exp(g.cell(log_probs, t, y_hat));
  Var eta = g.scale(p_hat, (reward - baseline) * static_cast<double>(cfg.length_scale));
  if (cfg.eta_clamp) eta = g.clamp(eta, cfg.eta_clamp->first, cfg.eta_clamp->second);
  return eta;
}

ProbDist maybe_renormalized(ProbDist d, const SignalConfig& cfg) {
  if (!cfg.renormalize_rs) return d;
  double z = 0.0;
  for (double v : d) z += v;
  for (double& v : d) v /= z;
  return d;
}

}  // namespace

Var label_smoothed_kl_node(Graph& g, Var log_probs, const std::vector<int>& gt,
                           const SignalConfig& cfg) {
  cfg.validate();
  check_log_probs(g, log_probs, gt.size(), cfg);
  std::vector<Var> terms;
  for (size_t t = 0; t < gt.size(); ++t) {
    if (gt[t] == cfg.pad_id) continue;
    const ProbDist d = maybe_renormalized(label_smoothed(gt[t], cfg), cfg);
    terms.push_back(fixed_target_kl(g, log_probs, static_cast<int>(t), d));
  }
  return mean_of(g, terms);
}

Var biased_loss_node(Graph& g, Var log_probs, const std::vector<int>& gt,
                     const std::vector<int>& sampled, const std::vector<double>& rewards,
                     const std::vector<double>& baselines, const SignalConfig& cfg) {
  cfg.validate();
  if (gt.size() != sampled.size() || gt.size() != rewards.size() || gt.size() != baselines.size())
    throw std::invalid_argument("biased_loss_node: input lists must share one length");
  check_log_probs(g, log_probs, gt.size(), cfg);

  std::vector<Var> terms;
  for (size_t ts = 0; ts < gt.size(); ++ts) {
    if (gt[ts] == cfg.pad_id) continue;
    const int t = static_cast<int>(ts);
    const int y = gt[ts];
    const int y_hat = sampled[ts];
    if (y_hat == y) {
      const ProbDist d = maybe_renormalized(label_smoothed(y, cfg), cfg);
      terms.push_back(fixed_target_kl(g, log_probs, t, d));
      continue;
    }

    const ProbDist d_ls = label_smoothed(y, cfg);
    const Var eta = eta_node(g, log_probs, t, y_hat, rewards[ts], baselines[ts], cfg);
    const Var one_minus_eta = g.add_scalar(g.scale(eta, -1.0), 1.0);
    const Var a_y = g.clamp_min(g.scale(one_minus_eta, d_ls[static_cast<size_t>(y)]), 0.0);
    const Var a_h = g.clamp_min(g.scale(eta, 1.0 - cfg.c_smooth), 0.0);
    const Var log_ay = g.log(g.clamp_min(a_y, 1e-300));
    const Var log_ah = g.log(g.clamp_min(a_h, 1e-300));
    const Var lp_y = g.cell(log_probs, t, y);
    const Var lp_h = g.cell(log_probs, t, y_hat);

    ProbDist d_rest = d_ls;
    d_rest[static_cast<size_t>(y)] = 0.0;
    d_rest[static_cast<size_t>(y_hat)] = 0.0;
    const double rest_entropy = entropy_term(d_rest);
    const Var rest_cross = g.dot_row_const(log_probs, t, d_rest);

    if (!cfg.renormalize_rs) {
      const Var term_y = g.mul(a_y, g.sub(log_ay, lp_y));
      const Var term_h = g.mul(a_h, g.sub(log_ah, lp_h));
      const Var term_rest = g.add_scalar(g.scale(rest_cross, -1.0), rest_entropy);
      terms.push_back(g.add(g.add(term_y, term_h), term_rest));
    } else {
      double rest_mass = 0.0;
      for (double v : d_rest) rest_mass += v;
      const Var z = g.add_scalar(g.add(a_y, a_h), rest_mass);
      const Var s1 = g.add_scalar(g.add(g.mul(a_y, log_ay), g.mul(a_h, log_ah)), rest_entropy);
      const Var s2 = g.add(g.add(g.mul(a_y, lp_y), g.mul(a_h, lp_h)), rest_cross);
      terms.push_back(g.sub(g.mul(g.sub(s1, s2), g.reciprocal(z)), g.log(z)));
    }
  }
  return mean_of(g, terms);
}

Var weighted_loss_node(Graph& g, Var log_probs, const std::vector<int>& gt,
                       const std::vector<int>& sampled, const std::vector<double>& rewards,
                       const std::vector<double>& baselines, const SignalConfig& cfg,
                       double norm_const) {
  cfg.validate();
  if (!(norm_const > 0.0))
    throw std::invalid_argument("weighted_loss_node: norm_const must be positive");
  if (gt.size() != sampled.size() || gt.size() != rewards.size() || gt.size() != baselines.size())
    throw std::invalid_argument("weighted_loss_node: input lists must share one length");
  check_log_probs(g, log_probs, gt.size(), cfg);

  std::vector<Var> terms;
  for (size_t ts = 0; ts < gt.size(); ++ts) {
    if (gt[ts] == cfg.pad_id) continue;
    const int t = static_cast<int>(ts);
    const ProbDist d = maybe_renormalized(label_smoothed(gt[ts], cfg), cfg);
    const Var kl = fixed_target_kl(g, log_probs, t, d);
    const Var eta01 =
        g.clamp(eta_node(g, log_probs, t, sampled[ts], rewards[ts], baselines[ts], cfg), 0.0, 1.0);
    const Var weight = g.scale(g.add_scalar(g.scale(eta01, -1.0), 1.0), norm_const);
    terms.push_back(g.mul(weight, kl));
  }
  return mean_of(g, terms);
}

}  // namespace capgen::signal
