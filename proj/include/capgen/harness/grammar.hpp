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

#include <cstdint>
#include <string>

#include "capgen/harness/dataset.hpp"

namespace capgen::harness {

/// Two-clause synthetic grammar. Captions read
///   "the <size> <color> <shape> then <verb> <adverb>"
/// where the subject attributes are functions of the video features only and
/// the action attributes of the audio features only, so neither modality
/// alone can caption the sample fully. Features are sums of per-attribute
/// prototype vectors plus optional Gaussian jitter.
struct GrammarConfig {
  int n_sizes = 4;
  int n_colors = 5;
  int n_shapes = 5;
  int n_verbs = 8;
  int n_adverbs = 6;
  int d_audio = 16;
  int d_video = 32;
  int min_feat_len = 3;
  int max_feat_len = 5;
  double jitter = 0.0;
  int vocab_size = 200;
  int n_samples = 2000;

  void validate() const;
};

/// The clause delimiter token of the grammar.
extern const char* const kDelimiter;

/// Deterministic in (cfg, seed): the same pair always produces a
/// bit-identical dataset.
Dataset generate_dataset(const GrammarConfig& cfg, uint64_t seed);

/// The critic rule matching the grammar's delimiters.
rewards::CriticRule grammar_critic();

}  // namespace capgen::harness
