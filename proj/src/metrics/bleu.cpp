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

#include "capgen/metrics/bleu.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <unordered_map>

namespace capgen::metrics {

namespace {

std::unordered_map<std::string, int> ngram_counts(const std::vector<Token>& tokens, int k) {
  std::unordered_map<std::string, int> counts;
  if (static_cast<int>(tokens.size()) < k) return counts;
  for (size_t i = 0; i + static_cast<size_t>(k) <= tokens.size(); ++i) {
    std::string key;
    for (int j = 0; j < k; ++j) {
      if (j) key.push_back('\x1f');
      key += tokens[i + static_cast<size_t>(j)];
    }
    ++counts[key];
  }
  return counts;
}

}  // namespace

double bleu_n(const std::vector<Token>& hyp, const std::vector<Token>& ref, int n) {
  if (n < 1) throw std::invalid_argument("bleu_n: n must be at least 1");
  if (hyp.empty() || ref.empty()) return 0.0;
  double log_sum = 0.0;
  for (int k = 1; k <= n; ++k) {
    const auto hyp_grams = ngram_counts(hyp, k);
    if (hyp_grams.empty()) return 0.0;
    const auto ref_grams = ngram_counts(ref, k);
    int clipped = 0, total = 0;
    for (const auto& [gram, count] : hyp_grams) {
      total += count;
      const auto it = ref_grams.find(gram);
      if (it != ref_grams.end()) clipped += std::min(count, it->second);
    }
    if (clipped == 0) return 0.0;
    log_sum += std::log(static_cast<double>(clipped) / total) / n;
  }
  double bp = 1.0;
  if (hyp.size() < ref.size())
    bp = std::exp(1.0 - static_cast<double>(ref.size()) / static_cast<double>(hyp.size()));
  return bp * std::exp(log_sum);
}

}  // namespace capgen::metrics
