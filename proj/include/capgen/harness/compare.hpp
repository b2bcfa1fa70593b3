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

#include <string>
#include <vector>

#include "capgen/signal/signal.hpp"

namespace capgen::harness {

/// Per-token comparison of the plain label-smoothed KL against the
/// reward-scaled ("biased") KL on a synthetic peaked model distribution.
struct DivergenceRow {
  int t = 0;
  std::string gt_token;
  std::string pred_token;
  double reward = 0.0;
  double eta = 0.0;
  double standard_kl = 0.0;
  double biased_kl = 0.0;
  int match_ref_index = -1;      // aligned GT position of the predicted token
  std::string match_kind;        // "exact", "stem" or ""
};

struct DivergenceReport {
  std::vector<DivergenceRow> rows;
  double standard_total = 0.0;
  double biased_total = 0.0;
  double standard_mean = 0.0;  // totals normalized by the compared length
  double biased_mean = 0.0;
};

/// model_peak is the probability mass the synthetic model places on its own
/// predicted token; the remainder is uniform. Rewards come from the
/// prediction's incremental METEOR trace against the ground truth (discount
/// gamma_worker, 0 = raw deltas) with a zero baseline. Throws if either text
/// tokenizes to nothing or model_peak is outside (0,1).
DivergenceReport compare_divergence(const std::string& gt_text, const std::string& pred_text,
                                    double model_peak, const signal::SignalConfig& base_cfg,
                                    double gamma_worker = 0.0);

void write_divergence_csv(const DivergenceReport& report, const std::string& path);
/// Simple grouped bar chart of the per-token divergences.
void write_divergence_svg(const DivergenceReport& report, const std::string& path);

}  // namespace capgen::harness
