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

#include "capgen/metrics/token.hpp"

namespace capgen::metrics {

/// Sentence BLEU-n against a single reference: geometric mean of the
/// modified k-gram precisions for k = 1..n with uniform weights, times the
/// brevity penalty exp(1 - |ref|/|hyp|) when the hypothesis is shorter.
/// Returns 0 whenever any k-gram precision is 0. Throws for n < 1.
double bleu_n(const std::vector<Token>& hyp, const std::vector<Token>& ref, int n);

}  // namespace capgen::metrics
