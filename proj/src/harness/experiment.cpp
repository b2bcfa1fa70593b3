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

#include "capgen/harness/experiment.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace capgen::harness {

namespace {

using nlohmann::json;

void parse_signal(const json& j, signal::SignalConfig& cfg) {
  cfg.label_smoothing = j.value("label_smoothing", cfg.label_smoothing);
  cfg.c_smooth = j.value("c_smooth", cfg.c_smooth);
  cfg.literal_denominator = j.value("literal_denominator", cfg.literal_denominator);
  cfg.renormalize_rs = j.value("renormalize_rs", cfg.renormalize_rs);
  if (j.contains("eta_clamp")) {
    if (j["eta_clamp"].is_null()) {
      cfg.eta_clamp.reset();
    } else {
      const auto& arr = j["eta_clamp"];
      if (!arr.is_array() || arr.size() != 2)
        throw std::invalid_argument("config: eta_clamp must be [low, high] or null");
      cfg.eta_clamp = {arr[0].get<double>(), arr[1].get<double>()};
    }
  }
}

void parse_model(const json& j, model::ModelConfig& cfg) {
  cfg.d_latent = j.value("d_latent", cfg.d_latent);
  cfg.d_audio_in = j.value("d_audio_in", 0);
  cfg.d_video_in = j.value("d_video_in", 0);
  cfg.d_text = j.value("d_text", cfg.d_text);
  cfg.heads = j.value("heads", cfg.heads);
  cfg.layers = j.value("layers", cfg.layers);
  cfg.d_goal = j.value("d_goal", cfg.d_goal);
  cfg.max_len = j.value("max_len", cfg.max_len);
  cfg.sigma_rel = j.value("sigma_rel", cfg.sigma_rel);
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("config: cannot open " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return from_json_text(ss.str());
}

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
  const json j = json::parse(text);
  ExperimentConfig cfg;
  cfg.mode = j.value("mode", cfg.mode);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.dataset = j.value("dataset", cfg.dataset);
  cfg.out_dir = j.value("out_dir", cfg.out_dir);
  cfg.epochs_warmstart = j.value("epochs_warmstart", cfg.epochs_warmstart);
  cfg.epochs_hrl = j.value("epochs_hrl", cfg.epochs_hrl);
  cfg.batch_size = j.value("batch_size", cfg.batch_size);
  cfg.val_fraction = j.value("val_fraction", cfg.val_fraction);
  cfg.eval_max = j.value("eval_max", cfg.eval_max);
  cfg.gamma_worker = j.value("gamma_worker", cfg.gamma_worker);
  cfg.gamma_manager = j.value("gamma_manager", cfg.gamma_manager);
  cfg.norm_const = j.value("norm_const", cfg.norm_const);
  if (j.contains("optimizer")) {
    const auto& o = j["optimizer"];
    cfg.optimizer.lr = o.value("lr", cfg.optimizer.lr);
    cfg.optimizer.momentum = o.value("momentum", cfg.optimizer.momentum);
    cfg.optimizer.lr_hrl = o.value("lr_hrl", cfg.optimizer.lr_hrl);
  }
  if (j.contains("signal")) parse_signal(j["signal"], cfg.sig);
  if (j.contains("model")) parse_model(j["model"], cfg.net);
  // The weighted variant clamps the advantage into (0,1) unless the config
  // says otherwise.
  if (cfg.mode == "bmhrl_weighted" && !cfg.sig.eta_clamp) cfg.sig.eta_clamp = {0.0, 1.0};
  cfg.validate();
  return cfg;
}

std::string ExperimentConfig::to_json_text() const {
  json j;
  j["mode"] = mode;
  j["seed"] = seed;
  j["dataset"] = dataset;
  j["out_dir"] = out_dir;
  j["epochs_warmstart"] = epochs_warmstart;
  j["epochs_hrl"] = epochs_hrl;
  j["batch_size"] = batch_size;
  j["val_fraction"] = val_fraction;
  j["eval_max"] = eval_max;
  j["gamma_worker"] = gamma_worker;
  j["gamma_manager"] = gamma_manager;
  j["norm_const"] = norm_const;
  j["optimizer"] = {{"lr", optimizer.lr},
                    {"momentum", optimizer.momentum},
                    {"lr_hrl", optimizer.lr_hrl}};
  json sig_j = {{"label_smoothing", sig.label_smoothing},
                {"c_smooth", sig.c_smooth},
                {"literal_denominator", sig.literal_denominator},
                {"renormalize_rs", sig.renormalize_rs}};
  if (sig.eta_clamp) sig_j["eta_clamp"] = {sig.eta_clamp->first, sig.eta_clamp->second};
  j["signal"] = sig_j;
  j["model"] = {{"d_latent", net.d_latent}, {"d_audio_in", net.d_audio_in},
                {"d_video_in", net.d_video_in}, {"d_text", net.d_text},
                {"heads", net.heads},       {"layers", net.layers},
                {"d_goal", net.d_goal},     {"max_len", net.max_len},
                {"sigma_rel", net.sigma_rel}};
  return j.dump(2);
}

void ExperimentConfig::validate() const {
  static const std::set<std::string> kModes = {"bmhrl", "bmhrl_weighted", "bmh", "audio_only",
                                               "vision_only"};
  if (!kModes.count(mode)) throw std::invalid_argument("config: unknown mode '" + mode + "'");
  if (mode == "audio_only" && net.d_video_in != 0)
    throw std::invalid_argument("config: audio_only forbids video dims");
  if (mode == "vision_only" && net.d_audio_in != 0)
    throw std::invalid_argument("config: vision_only forbids audio dims");
  if (epochs_warmstart < 0 || epochs_hrl < 0)
    throw std::invalid_argument("config: epoch counts must be non-negative");
  if (batch_size < 1) throw std::invalid_argument("config: batch_size must be positive");
  if (val_fraction <= 0.0 || val_fraction >= 1.0)
    throw std::invalid_argument("config: val_fraction must lie in (0,1)");
  if (gamma_worker < 0.0 || gamma_worker > 1.0 || gamma_manager < 0.0 || gamma_manager > 1.0)
    throw std::invalid_argument("config: discount factors must lie in [0,1]");
  if (!(norm_const > 0.0)) throw std::invalid_argument("config: norm_const must be positive");
}

model::FusionMode ExperimentConfig::fusion() const {
  if (mode == "audio_only") return model::FusionMode::audio_only;
  if (mode == "vision_only") return model::FusionMode::vision_only;
  return model::FusionMode::bimodal;
}

}  // namespace capgen::harness
