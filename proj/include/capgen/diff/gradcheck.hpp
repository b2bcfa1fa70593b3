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

#include <functional>
#include <string>
#include <vector>

#include "capgen/diff/graph.hpp"
#include "capgen/diff/tensor.hpp"

namespace capgen::diff {

/// Builds a scalar loss over the given leaf Vars (added with requires_grad)
/// on a fresh Graph. Must be deterministic in the leaf values.
using GraphBuilder = std::function<Var(Graph&, const std::vector<Var>&)>;

struct GradCheckReport {
  bool pass = false;
  double max_rel_err = 0.0;
  std::vector<double> per_leaf_max;  // max relative error per leaf
  int worst_leaf = -1;
  size_t worst_coord = 0;
  int coords_checked = 0;
  std::string summary() const;
};

/// Compares analytic gradients against central finite differences. When
/// `max_coords_per_leaf` is positive, only that many coordinates per leaf are
/// probed (chosen deterministically from `seed`); otherwise every coordinate
/// is checked.
GradCheckReport gradient_check(const GraphBuilder& build, const std::vector<Tensor>& leaves,
                               double tol, double eps = 1e-5, int max_coords_per_leaf = -1,
                               uint64_t seed = 0);

}  // namespace capgen::diff
