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

#include "capgen/harness/compare.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>
#include <unordered_map>

#include "capgen/metrics/meteor.hpp"
#include "capgen/metrics/token.hpp"
#include "capgen/rewards/rewards.hpp"

namespace capgen::harness {

DivergenceReport compare_divergence(const std::string& gt_text, const std::string& pred_text,
                                    double model_peak, const signal::SignalConfig& base_cfg,
                                    double gamma_worker) {
  if (!(model_peak > 0.0 && model_peak < 1.0))
    throw std::invalid_argument("compare_divergence: model_peak must lie in (0,1)");
  const auto gt = metrics::tokenize(gt_text);
  const auto pred = metrics::tokenize(pred_text);
  if (gt.empty() || pred.empty())
    throw std::invalid_argument("compare_divergence: tokenization yields an empty sequence");

  // Token table: union of both captions in order of first appearance, padded
  // so the label-smoothing denominator stays valid.
  std::unordered_map<std::string, int> ids;
  std::vector<std::string> table;
  const auto intern = [&](const std::string& w) {
    const auto [it, inserted] = ids.try_emplace(w, static_cast<int>(table.size()));
    if (inserted) table.push_back(w);
    return it->second;
  };
  std::vector<int> gt_ids, pred_ids;
  for (const auto& w : gt) gt_ids.push_back(intern(w));
  for (const auto& w : pred) pred_ids.push_back(intern(w));
  int vocab = static_cast<int>(table.size());
  vocab = std::max(vocab, 3);

  signal::SignalConfig cfg = base_cfg;
  cfg.vocab_size = vocab;
  cfg.pad_id = -1;  // every mini-vocab id is a real token
  cfg.length_scale = static_cast<int>(gt.size());
  cfg.validate();

  const auto trace = rewards::delta_meteor_trace(pred, gt);
  const auto reward_vec = rewards::worker_rewards(trace, gamma_worker);
  const auto alignment = metrics::align(pred, gt);
  std::vector<int> match_ref(pred.size(), -1);
  std::vector<bool> match_stem(pred.size(), false);
  for (const auto& p : alignment.pairs) {
    match_ref[static_cast<size_t>(p.hyp_index)] = p.ref_index;
    match_stem[static_cast<size_t>(p.hyp_index)] = p.stem_match;
  }

  DivergenceReport report;
  const size_t t_eff = std::min(gt.size(), pred.size());
  for (size_t t = 0; t < t_eff; ++t) {
    const int y = gt_ids[t];
    const int y_hat = pred_ids[t];
    signal::ProbDist model(static_cast<size_t>(vocab),
                           (1.0 - model_peak) / static_cast<double>(vocab - 1));
    model[static_cast<size_t>(y_hat)] = model_peak;

    const auto d_ls = signal::label_smoothed(y, cfg);
    const double eta =
        signal::advantage(reward_vec[t], 0.0, cfg.length_scale, model_peak, cfg);
    const auto d_rs = y_hat == y ? d_ls : signal::reward_scaled(d_ls, y, y_hat, eta, cfg);

    DivergenceRow row;
    row.t = static_cast<int>(t);
    row.gt_token = gt[t];
    row.pred_token = pred[t];
    row.reward = reward_vec[t];
    row.eta = y_hat == y ? 0.0 : eta;
    row.standard_kl = signal::kl_divergence(d_ls, model);
    row.biased_kl = signal::kl_divergence(d_rs, model);
    row.match_ref_index = match_ref[t];
    row.match_kind = match_ref[t] < 0 ? "" : (match_stem[t] ? "stem" : "exact");
    report.rows.push_back(std::move(row));
    report.standard_total += report.rows.back().standard_kl;
    report.biased_total += report.rows.back().biased_kl;
  }
  const double inv = 1.0 / static_cast<double>(t_eff);
  report.standard_mean = report.standard_total * inv;
  report.biased_mean = report.biased_total * inv;
  return report;
}

void write_divergence_csv(const DivergenceReport& report, const std::string& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("write_divergence_csv: cannot open " + path);
  os << "t,gt_token,pred_token,reward,eta,standard_kl,biased_kl,match_ref_index,match_kind\n";
  for (const auto& r : report.rows)
    os << r.t << "," << r.gt_token << "," << r.pred_token << "," << r.reward << "," << r.eta
       << "," << r.standard_kl << "," << r.biased_kl << "," << r.match_ref_index << ","
       << r.match_kind << "\n";
  os << "total,,," << "," << "," << report.standard_total << "," << report.biased_total << ",,\n";
  os << "mean,,," << "," << "," << report.standard_mean << "," << report.biased_mean << ",,\n";
}

void write_divergence_svg(const DivergenceReport& report, const std::string& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("write_divergence_svg: cannot open " + path);
  const int n = static_cast<int>(report.rows.size());
  const int bar_w = 18, group_gap = 26, margin = 50;
  const int width = margin * 2 + n * (2 * bar_w + group_gap);
  const int height = 320, plot_h = 240;
  double max_kl = 1e-9;
  for (const auto& r : report.rows) max_kl = std::max({max_kl, r.standard_kl, r.biased_kl});

  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << margin << "\" y=\"20\" font-size=\"13\">standard (gray) vs biased "
        "(steelblue) KL per token</text>\n";
  for (int i = 0; i < n; ++i) {
    const auto& r = report.rows[static_cast<size_t>(i)];
    const int x0 = margin + i * (2 * bar_w + group_gap);
    const int h_std = static_cast<int>(plot_h * r.standard_kl / max_kl);
    const int h_bia = static_cast<int>(plot_h * r.biased_kl / max_kl);
    os << "<rect x=\"" << x0 << "\" y=\"" << 40 + plot_h - h_std << "\" width=\"" << bar_w
       << "\" height=\"" << h_std << "\" fill=\"gray\"/>\n";
    os << "<rect x=\"" << x0 + bar_w + 2 << "\" y=\"" << 40 + plot_h - h_bia << "\" width=\""
       << bar_w << "\" height=\"" << h_bia << "\" fill=\"steelblue\"/>\n";
    os << "<text x=\"" << x0 << "\" y=\"" << 40 + plot_h + 16 << "\" font-size=\"11\">"
       << r.pred_token << "</text>\n";
  }
  os << "</svg>\n";
}

}  // namespace capgen::harness
