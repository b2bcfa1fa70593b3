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

#include "capgen/harness/dataset.hpp"
#include "capgen/harness/experiment.hpp"
#include "capgen/model/model.hpp"

namespace capgen::harness {

/// Corpus-mean sentence scores, reported x100, plus the count of distinct
/// non-special tokens the model emitted over the split.
struct EvalReport {
  double bleu3 = 0.0;
  double bleu4 = 0.0;
  double meteor = 0.0;
  int vocab_usage = 0;
  int n_samples = 0;
};

/// Scores already-decoded captions against their references.
EvalReport score_captions(const Vocabulary& vocab,
                          const std::vector<std::pair<std::vector<int>, std::vector<int>>>&
                              decoded_and_reference);

/// Greedy-decodes every listed sample and averages the sentence metrics.
EvalReport evaluate_split(const model::CaptionModel& m, const Dataset& ds,
                          const std::vector<int>& indices);

/// Deterministic train/validation split of a dataset by seed.
struct Split {
  std::vector<int> train;
  std::vector<int> val;
};
Split split_dataset(size_t n_samples, double val_fraction, uint64_t seed);

/// Loads a checkpoint against the experiment's dataset and evaluates one of
/// "train", "val" or "all".
EvalReport evaluate_checkpoint(const ExperimentConfig& cfg, const std::string& checkpoint_path,
                               const std::string& split_name);

/// Builds the model for an experiment once the dataset is known.
model::CaptionModel build_model(const ExperimentConfig& cfg, const Dataset& ds);

}  // namespace capgen::harness
