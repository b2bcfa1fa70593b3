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

// Helpers for checking the analytic gradient of the biased loss through a
// whole model against central finite differences over parameter coordinates.

#pragma once

#include <cmath>
#include <vector>

#include "capgen/model/model.hpp"
#include "capgen/signal/loss_graph.hpp"

namespace capgen::testing {

struct ModelLossFixture {
  model::TrainSample sample;
  std::vector<int> sampled;
  std::vector<double> rewards;
  std::vector<double> baselines;
  signal::SignalConfig cfg;
};

inline double model_biased_loss(model::CaptionModel& m, const ModelLossFixture& fx,
                                diff::ParamStore* grads_into = nullptr) {
  model::CaptionModel::Forward f = m.make_forward();
  const auto out = m.forward_teacher_forced(f, fx.sample, false, nullptr);
  const diff::Var loss = signal::biased_loss_node(f.g, out.worker.log_probs, out.targets,
                                                  fx.sampled, fx.rewards, fx.baselines, fx.cfg);
  if (grads_into) {
    f.g.backward(loss);
    for (int id = 0; id < m.params().size(); ++id) {
      const diff::Var v = f.bound[static_cast<size_t>(id)];
      if (!v.valid()) continue;
      const diff::Tensor& grad = f.g.grad(v);
      if (grad.size() == 0) continue;
      diff::Tensor& acc = grads_into->at(id).grad;
      for (size_t i = 0; i < grad.size(); ++i) acc[i] += grad[i];
    }
  }
  return f.g.scalar_value(loss);
}

struct ModelFdReport {
  double max_rel_err = 0.0;
  int coords = 0;
};

/// Compares the analytic model-gradient of the biased loss against central
/// finite differences on `n_coords` randomly chosen parameter coordinates.
inline ModelFdReport model_fd_check(model::CaptionModel& m, const ModelLossFixture& fx,
                                    int n_coords, uint64_t seed, double eps = 1e-5) {
  m.params().zero_grad();
  model_biased_loss(m, fx, &m.params());

  ModelFdReport report;
  diff::Rng rng(seed);
  for (int c = 0; c < n_coords; ++c) {
    const int id = static_cast<int>(rng.below(static_cast<uint64_t>(m.params().size())));
    auto& param = m.params().at(id);
    if (param.value.size() == 0) continue;
    const size_t coord = rng.below(param.value.size());
    const double orig = param.value[coord];
    param.value[coord] = orig + eps;
    const double fp = model_biased_loss(m, fx);
    param.value[coord] = orig - eps;
    const double fm = model_biased_loss(m, fx);
    param.value[coord] = orig;
    const double numeric = (fp - fm) / (2.0 * eps);
    const double analytic = param.grad[coord];
    const double rel =
        std::fabs(analytic - numeric) / std::max({std::fabs(analytic), std::fabs(numeric), 1e-6});
    report.max_rel_err = std::max(report.max_rel_err, rel);
    ++report.coords;
  }
  return report;
}

}  // namespace capgen::testing
