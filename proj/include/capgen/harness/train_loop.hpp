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

#include "capgen/harness/evaluate.hpp"
#include "capgen/harness/experiment.hpp"

namespace capgen::harness {

struct TrainResult {
  std::string csv_path;
  std::string last_checkpoint;
  int epochs_completed = 0;
  EvalReport final_eval;
};

/// Runs warm-start epochs followed by alternating manager/worker epochs
/// (manager first), evaluating on the held-out split and appending one CSV
/// row per epoch. Checkpoints and a resumable training state are written
/// after every epoch; `resume_checkpoint` continues bit-exactly from one of
/// them. A non-finite loss aborts with a diagnostic.
TrainResult run_training(const ExperimentConfig& cfg, const std::string& resume_checkpoint = "");

}  // namespace capgen::harness
