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

#include "capgen/metrics/meteor.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_map>

#include "capgen/metrics/stemmer.hpp"

namespace capgen::metrics {

namespace {

// Branch-and-bound search for the stage-wise maximal matching with minimal
// chunk count. The per-type match counts are forced: every surface type w
// contributes min(#hyp_w, #ref_w) exact pairs, and every stem class of the
// leftovers contributes min of the residual counts. What the search decides
// is which occurrences pair up, which is the only freedom that affects the
// chunk count. Candidates are explored in (hyp_index, ref_index) order, so
// the first solution reaching the best chunk count is the lexicographically
// smallest one.
class AlignSearch {
 public:
  AlignSearch(const std::vector<Token>& hyp, const std::vector<Token>& ref, bool stemming)
      : hyp_(hyp), ref_(ref) {
    intern(hyp_, hyp_surf_, surf_ids_);
    intern(ref_, ref_surf_, surf_ids_);
    if (stemming) {
      std::vector<std::string> hyp_stems(hyp_.size()), ref_stems(ref_.size());
      for (size_t i = 0; i < hyp_.size(); ++i) hyp_stems[i] = porter_stem(hyp_[i]);
      for (size_t i = 0; i < ref_.size(); ++i) ref_stems[i] = porter_stem(ref_[i]);
      intern(hyp_stems, hyp_stem_, stem_ids_);
      intern(ref_stems, ref_stem_, stem_ids_);
    }

    const int n_surf = static_cast<int>(surf_ids_.size());
    std::vector<int> h_count(n_surf, 0), r_count(n_surf, 0);
    for (int t : hyp_surf_) ++h_count[static_cast<size_t>(t)];
    for (int t : ref_surf_) ++r_count[static_cast<size_t>(t)];
    exact_quota_.resize(static_cast<size_t>(n_surf));
    for (int w = 0; w < n_surf; ++w) {
      exact_quota_[static_cast<size_t>(w)] = std::min(h_count[static_cast<size_t>(w)], r_count[static_cast<size_t>(w)]);
      exact_target_ += exact_quota_[static_cast<size_t>(w)];
    }

    if (stemming) {
      for (size_t i = 0; i < hyp_.size(); ++i) surf_to_stem_[hyp_surf_[i]] = hyp_stem_[i];
      for (size_t i = 0; i < ref_.size(); ++i) surf_to_stem_[ref_surf_[i]] = ref_stem_[i];
      const int n_stem = static_cast<int>(stem_ids_.size());
      std::vector<int> h_res(n_stem, 0), r_res(n_stem, 0);
      for (int w = 0; w < n_surf; ++w) {
        const int stem = surf_to_stem_.at(w);
        h_res[static_cast<size_t>(stem)] += h_count[static_cast<size_t>(w)] - exact_quota_[static_cast<size_t>(w)];
        r_res[static_cast<size_t>(stem)] += r_count[static_cast<size_t>(w)] - exact_quota_[static_cast<size_t>(w)];
      }
      stem_quota_.resize(static_cast<size_t>(n_stem));
      for (int s = 0; s < n_stem; ++s) {
        stem_quota_[static_cast<size_t>(s)] = std::min(h_res[static_cast<size_t>(s)], r_res[static_cast<size_t>(s)]);
        stem_target_ += stem_quota_[static_cast<size_t>(s)];
      }
    }

    exact_used_.assign(exact_quota_.size(), 0);
    stem_used_.assign(stem_quota_.size(), 0);
    remaining_surf_ = h_count;
    ref_used_.assign(ref_.size(), false);
  }

  Alignment run() {
    Alignment out;
    if (exact_target_ + stem_target_ == 0) return out;
    dfs(0, 0, 0, 0, -2, -2);
    out.matches = exact_target_ + stem_target_;
    out.chunks = best_chunks_;
    out.pairs = best_pairs_;
    return out;
  }

 private:
  static void intern(const std::vector<std::string>& words, std::vector<int>& ids,
                     std::unordered_map<std::string, int>& table) {
    ids.reserve(words.size());
    for (const auto& w : words) {
      auto [it, _] = table.try_emplace(w, static_cast<int>(table.size()));
      ids.push_back(it->second);
    }
  }

  void dfs(size_t i, int exact, int stem, int chunks, int last_i, int last_j) {
    if (best_chunks_ >= 0 && chunks >= best_chunks_) return;
    if (exact + stem + static_cast<int>(hyp_.size() - i) < exact_target_ + stem_target_) return;
    if (i == hyp_.size()) {
      if (exact == exact_target_ && stem == stem_target_) {
        best_chunks_ = chunks;
        best_pairs_ = current_;
      }
      return;
    }
    const int w = hyp_surf_[i];
    --remaining_surf_[static_cast<size_t>(w)];

    for (size_t j = 0; j < ref_.size(); ++j) {
      if (ref_used_[j]) continue;
      const bool exact_ok = ref_surf_[j] == w;
      const bool stem_ok = !exact_ok && !hyp_stem_.empty() && hyp_stem_[i] == ref_stem_[j];
      if (exact_ok) {
        if (exact_used_[static_cast<size_t>(w)] >= exact_quota_[static_cast<size_t>(w)]) continue;
      } else if (stem_ok) {
        const int s = hyp_stem_[i];
        if (stem_used_[static_cast<size_t>(s)] >= stem_quota_[static_cast<size_t>(s)]) continue;
      } else {
        continue;
      }
      const int nc = chunks + ((static_cast<int>(i) == last_i + 1 && static_cast<int>(j) == last_j + 1) ? 0 : 1);
      ref_used_[j] = true;
      current_.push_back({static_cast<int>(i), static_cast<int>(j), !exact_ok});
      if (exact_ok) {
        ++exact_used_[static_cast<size_t>(w)];
        dfs(i + 1, exact + 1, stem, nc, static_cast<int>(i), static_cast<int>(j));
        --exact_used_[static_cast<size_t>(w)];
      } else {
        ++stem_used_[static_cast<size_t>(hyp_stem_[i])];
        dfs(i + 1, exact, stem + 1, nc, static_cast<int>(i), static_cast<int>(j));
        --stem_used_[static_cast<size_t>(hyp_stem_[i])];
      }
      current_.pop_back();
      ref_used_[j] = false;
    }

    // Leave position i unmatched, unless its type cannot fill the exact
    // quota without it.
    if (exact_used_[static_cast<size_t>(w)] + remaining_surf_[static_cast<size_t>(w)] >=
        exact_quota_[static_cast<size_t>(w)])
      dfs(i + 1, exact, stem, chunks, last_i, last_j);

    ++remaining_surf_[static_cast<size_t>(w)];
  }

  const std::vector<Token>& hyp_;
  const std::vector<Token>& ref_;
  std::vector<int> hyp_surf_, ref_surf_, hyp_stem_, ref_stem_;
  std::unordered_map<std::string, int> surf_ids_, stem_ids_;
  std::unordered_map<int, int> surf_to_stem_;
  std::vector<int> exact_quota_, stem_quota_, exact_used_, stem_used_, remaining_surf_;
  std::vector<bool> ref_used_;
  int exact_target_ = 0;
  int stem_target_ = 0;
  int best_chunks_ = -1;
  std::vector<AlignedPair> current_, best_pairs_;
};

}  // namespace

Alignment align(const std::vector<Token>& hyp, const std::vector<Token>& ref,
                const MeteorParams& params) {
  if (hyp.empty() || ref.empty()) return {};
  AlignSearch search(hyp, ref, params.enable_stemming);
  return search.run();
}

MeteorScore meteor_score(const std::vector<Token>& hyp, const std::vector<Token>& ref,
                         const MeteorParams& params) {
  MeteorScore ms;
  if (hyp.empty() || ref.empty()) return ms;
  const Alignment a = align(hyp, ref, params);
  if (a.matches == 0) return ms;
  const double matches = static_cast<double>(a.matches);
  ms.precision = matches / static_cast<double>(hyp.size());
  ms.recall = matches / static_cast<double>(ref.size());
  ms.fmean = ms.precision * ms.recall /
             (params.alpha * ms.precision + (1.0 - params.alpha) * ms.recall);
  ms.penalty = params.gamma * std::pow(static_cast<double>(a.chunks) / matches, params.beta);
  ms.value = ms.fmean * (1.0 - ms.penalty);
  return ms;
}

}  // namespace capgen::metrics
