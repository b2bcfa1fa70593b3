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

#include "capgen/diff/gradcheck.hpp"

#include <cmath>
#include <cstdio>

#include "capgen/diff/rng.hpp"

namespace capgen::diff {

std::string GradCheckReport::summary() const {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%s: max rel err %.3e over %d coords (leaf %d, coord %zu)",
                pass ? "pass" : "FAIL", max_rel_err, coords_checked, worst_leaf, worst_coord);
  return buf;
}

namespace {

double eval_loss(const GraphBuilder& build, const std::vector<Tensor>& leaves) {
  Graph g;
  std::vector<Var> vars;
  vars.reserve(leaves.size());
  for (const Tensor& t : leaves) vars.push_back(g.leaf(t, true));
  return g.scalar_value(build(g, vars));
}

}  // namespace

GradCheckReport gradient_check(const GraphBuilder& build, const std::vector<Tensor>& leaves,
                               double tol, double eps, int max_coords_per_leaf, uint64_t seed) {
  // Analytic pass.
  Graph g;
  std::vector<Var> vars;
  vars.reserve(leaves.size());
  for (const Tensor& t : leaves) vars.push_back(g.leaf(t, true));
  g.backward(build(g, vars));

  GradCheckReport report;
  report.per_leaf_max.assign(leaves.size(), 0.0);
  Rng rng(seed ^ 0x5eedULL);
  std::vector<Tensor> work = leaves;
  for (size_t li = 0; li < leaves.size(); ++li) {
    const size_t n = leaves[li].size();
    std::vector<size_t> coords;
    if (max_coords_per_leaf > 0 && static_cast<size_t>(max_coords_per_leaf) < n) {
      for (int c = 0; c < max_coords_per_leaf; ++c) coords.push_back(rng.below(n));
    } else {
      coords.resize(n);
      for (size_t c = 0; c < n; ++c) coords[c] = c;
    }
    const Tensor& agrad = g.grad(vars[li]);
    for (size_t c : coords) {
      const double orig = work[li][c];
      work[li][c] = orig + eps;
      const double fp = eval_loss(build, work);
      work[li][c] = orig - eps;
      const double fm = eval_loss(build, work);
      work[li][c] = orig;
      const double numeric = (fp - fm) / (2.0 * eps);
      const double analytic = agrad.size() ? agrad[c] : 0.0;
      const double denom = std::max({std::fabs(analytic), std::fabs(numeric), 1e-6});
      const double rel = std::fabs(analytic - numeric) / denom;
      ++report.coords_checked;
      report.per_leaf_max[li] = std::max(report.per_leaf_max[li], rel);
      if (rel > report.max_rel_err) {
        report.max_rel_err = rel;
        report.worst_leaf = static_cast<int>(li);
        report.worst_coord = c;
      }
    }
  }
  report.pass = report.max_rel_err < tol;
  return report;
}

}  // namespace capgen::diff
