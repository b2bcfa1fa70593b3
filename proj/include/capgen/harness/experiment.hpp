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

#include "capgen/model/model.hpp"
#include "capgen/signal/signal.hpp"

namespace capgen::harness {

struct OptimizerConfig {
  double lr = 0.05;
  double momentum = 0.9;
  double lr_hrl = 0.0;  // 0: reuse lr for the fine-tuning phase
};

/// Experiment description, read from a JSON config with nested sections
/// ("model", "signal", "optimizer"). Dataset-dependent fields of the model
/// config (vocabulary size, caption length) are filled in when training
/// starts.
struct ExperimentConfig {
  std::string mode = "bmhrl";  // bmhrl | bmhrl_weighted | bmh | audio_only | vision_only
  uint64_t seed = 1;
  std::string dataset;
  std::string out_dir;
  int epochs_warmstart = 10;
  int epochs_hrl = 4;
  int batch_size = 8;
  double val_fraction = 0.2;
  int eval_max = 0;  // cap on per-epoch eval samples; 0 = full split
  double gamma_worker = 0.7;
  double gamma_manager = 0.8;
  double norm_const = 1.0;
  OptimizerConfig optimizer;
  signal::SignalConfig sig;
  // Input dims of 0 mean "take them from the dataset header".
  model::ModelConfig net = [] {
    model::ModelConfig m;
    m.d_audio_in = 0;
    m.d_video_in = 0;
    return m;
  }();

  static ExperimentConfig from_json_file(const std::string& path);
  static ExperimentConfig from_json_text(const std::string& text);
  std::string to_json_text() const;

  void validate() const;
  model::FusionMode fusion() const;
  bool hrl_enabled() const { return mode != "bmh"; }
  bool weighted() const { return mode == "bmhrl_weighted"; }
};

}  // namespace capgen::harness
