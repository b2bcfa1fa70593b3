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

#include "meteor_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "capgen/metrics/stemmer.hpp"

namespace capgen::testing {

namespace {

struct Pair {
  int h, r;
};

int count_chunks(std::vector<Pair> pairs) {
  std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) { return a.h < b.h; });
  int chunks = 0;
  for (size_t i = 0; i < pairs.size(); ++i) {
    if (i == 0 || pairs[i].h != pairs[i - 1].h + 1 || pairs[i].r != pairs[i - 1].r + 1) ++chunks;
  }
  return chunks;
}

// Enumerate every matching over the given compatibility predicate, invoking
// the callback on each complete assignment.
void enumerate_matchings(size_t i, size_t n_hyp, size_t n_ref, std::vector<bool>& ref_used,
                         const std::function<bool(size_t, size_t)>& compatible,
                         std::vector<Pair>& current,
                         const std::function<void(const std::vector<Pair>&)>& emit) {
  if (i == n_hyp) {
    emit(current);
    return;
  }
  for (size_t j = 0; j < n_ref; ++j) {
    if (ref_used[j] || !compatible(i, j)) continue;
    ref_used[j] = true;
    current.push_back({static_cast<int>(i), static_cast<int>(j)});
    enumerate_matchings(i + 1, n_hyp, n_ref, ref_used, compatible, current, emit);
    current.pop_back();
    ref_used[j] = false;
  }
  enumerate_matchings(i + 1, n_hyp, n_ref, ref_used, compatible, current, emit);
}

}  // namespace

OracleAlignment oracle_align(const std::vector<std::string>& hyp,
                             const std::vector<std::string>& ref, bool stemming) {
  OracleAlignment out;
  if (hyp.empty() || ref.empty()) return out;

  std::vector<std::string> hyp_stems, ref_stems;
  if (stemming) {
    for (const auto& w : hyp) hyp_stems.push_back(metrics::porter_stem(w));
    for (const auto& w : ref) ref_stems.push_back(metrics::porter_stem(w));
  }

  const auto exact_ok = [&](size_t i, size_t j) { return hyp[i] == ref[j]; };

  // Pass 1: maximum cardinality of the exact stage.
  size_t best_exact = 0;
  {
    std::vector<bool> used(ref.size(), false);
    std::vector<Pair> cur;
    enumerate_matchings(0, hyp.size(), ref.size(), used, exact_ok, cur,
                        [&](const std::vector<Pair>& m) { best_exact = std::max(best_exact, m.size()); });
  }

  // Pass 2: for every maximal exact matching, run the stem stage on the
  // leftovers (again to maximal cardinality) and track the best chunk count.
  int min_chunks = -1;
  size_t total_matches = 0;
  std::vector<bool> used(ref.size(), false);
  std::vector<Pair> cur;
  enumerate_matchings(
      0, hyp.size(), ref.size(), used, exact_ok, cur, [&](const std::vector<Pair>& exact_pairs) {
        if (exact_pairs.size() != best_exact) return;
        std::vector<bool> hyp_taken(hyp.size(), false), ref_taken(ref.size(), false);
        for (const Pair& p : exact_pairs) {
          hyp_taken[static_cast<size_t>(p.h)] = true;
          ref_taken[static_cast<size_t>(p.r)] = true;
        }
        const auto stem_ok = [&](size_t i, size_t j) {
          return stemming && !hyp_taken[i] && !ref_taken[j] && hyp[i] != ref[j] &&
                 hyp_stems[i] == ref_stems[j];
        };
        size_t best_stem = 0;
        {
          std::vector<bool> u2(ref.size(), false);
          std::vector<Pair> c2;
          enumerate_matchings(0, hyp.size(), ref.size(), u2, stem_ok, c2,
                              [&](const std::vector<Pair>& m) { best_stem = std::max(best_stem, m.size()); });
        }
        std::vector<bool> u2(ref.size(), false);
        std::vector<Pair> c2;
        enumerate_matchings(0, hyp.size(), ref.size(), u2, stem_ok, c2,
                            [&](const std::vector<Pair>& stem_pairs) {
                              if (stem_pairs.size() != best_stem) return;
                              std::vector<Pair> all = exact_pairs;
                              all.insert(all.end(), stem_pairs.begin(), stem_pairs.end());
                              const int chunks = count_chunks(std::move(all));
                              if (min_chunks < 0 || chunks < min_chunks) min_chunks = chunks;
                              total_matches = exact_pairs.size() + stem_pairs.size();
                            });
      });

  out.matches = static_cast<int>(total_matches);
  out.min_chunks = std::max(0, min_chunks);
  return out;
}

double oracle_meteor(const std::vector<std::string>& hyp, const std::vector<std::string>& ref,
                     const metrics::MeteorParams& params) {
  if (hyp.empty() || ref.empty()) return 0.0;
  const OracleAlignment a = oracle_align(hyp, ref, params.enable_stemming);
  if (a.matches == 0) return 0.0;
  const double m = a.matches;
  const double p = m / static_cast<double>(hyp.size());
  const double r = m / static_cast<double>(ref.size());
  const double fmean = p * r / (params.alpha * p + (1.0 - params.alpha) * r);
  const double penalty = params.gamma * std::pow(a.min_chunks / m, params.beta);
  return fmean * (1.0 - penalty);
}

}  // namespace capgen::testing
