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

#include "capgen/harness/train_loop.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "capgen/diff/checkpoint.hpp"
#include "capgen/diff/rng.hpp"

namespace capgen::harness {

namespace fs = std::filesystem;

namespace {

constexpr uint64_t kTrainStreamSalt = 0x7261696eULL;

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string phase_name(const ExperimentConfig& cfg, int epoch) {
  if (epoch < cfg.epochs_warmstart) return "warmstart";
  return ((epoch - cfg.epochs_warmstart) % 2 == 0) ? "manager" : "worker";
}

diff::NamedTensors momentum_snapshot(const diff::ParamStore& store) {
  diff::NamedTensors out;
  for (const auto& p : store.all()) out.emplace_back(p.name, p.momentum);
  return out;
}

void restore_momentum(diff::ParamStore& store, const diff::NamedTensors& tensors) {
  for (const auto& [name, value] : tensors) {
    const int id = store.find(name);
    if (id < 0) throw std::invalid_argument("resume: unknown momentum entry " + name);
    store.at(id).momentum = value;
  }
}

struct EpochPaths {
  std::string checkpoint;
  std::string state_bin;
  std::string state_json;
};

EpochPaths epoch_paths(const std::string& out_dir, int epoch) {
  const std::string tag = "_epoch_" + std::to_string(epoch);
  return {(fs::path(out_dir) / ("checkpoint" + tag + ".bin")).string(),
          (fs::path(out_dir) / ("trainstate" + tag + ".bin")).string(),
          (fs::path(out_dir) / ("trainstate" + tag + ".json")).string()};
}

}  // namespace

TrainResult run_training(const ExperimentConfig& cfg, const std::string& resume_checkpoint) {
  cfg.validate();
  if (cfg.out_dir.empty()) throw std::invalid_argument("run_training: out_dir not set");
  fs::create_directories(cfg.out_dir);

  const Dataset ds = read_dataset(cfg.dataset);
  const Split split = split_dataset(ds.samples.size(), cfg.val_fraction, cfg.seed);
  model::CaptionModel m = build_model(cfg, ds);

  signal::SignalConfig sig = cfg.sig;
  sig.vocab_size = ds.vocab.size();

  diff::Sgd opt(cfg.optimizer.lr, cfg.optimizer.momentum);
  diff::Rng rng(cfg.seed ^ kTrainStreamSalt);

  {
    std::ofstream cfg_echo(fs::path(cfg.out_dir) / "config.json");
    cfg_echo << cfg.to_json_text() << "\n";
  }

  const std::string csv_path = (fs::path(cfg.out_dir) / "metrics.csv").string();
  int start_epoch = 0;
  if (resume_checkpoint.empty()) {
    std::ofstream csv(csv_path, std::ios::trunc);
    csv << "epoch,phase,loss,mean_reward,token_accuracy,bleu3,bleu4,meteor,vocab_usage\n";
  } else {
    m.restore(diff::load_checkpoint(resume_checkpoint));
    std::string base = resume_checkpoint;
    const std::string needle = "checkpoint_epoch_";
    const size_t pos = base.rfind(needle);
    if (pos == std::string::npos || base.size() < 4)
      throw std::invalid_argument("resume: expected a checkpoint_epoch_N.bin path");
    const std::string tag = base.substr(pos + needle.size(), base.size() - pos - needle.size() - 4);
    const int epoch_done = std::stoi(tag);
    const EpochPaths paths = epoch_paths(cfg.out_dir, epoch_done);
    restore_momentum(m.params(), diff::load_checkpoint(paths.state_bin));
    std::ifstream state_is(paths.state_json);
    if (!state_is) throw std::runtime_error("resume: missing " + paths.state_json);
    const auto state = nlohmann::json::parse(state_is);
    rng.set_state(std::stoull(state.at("rng_state").get<std::string>()));
    start_epoch = state.at("epoch_done").get<int>() + 1;
    if (!fs::exists(csv_path)) throw std::runtime_error("resume: missing " + csv_path);
  }

  const int total_epochs = cfg.epochs_warmstart + (cfg.hrl_enabled() ? cfg.epochs_hrl : 0);
  const double lr_hrl = cfg.optimizer.lr_hrl > 0.0 ? cfg.optimizer.lr_hrl : cfg.optimizer.lr;

  TrainResult result;
  result.csv_path = csv_path;

  std::vector<int> eval_indices = split.val;
  if (cfg.eval_max > 0 && static_cast<int>(eval_indices.size()) > cfg.eval_max)
    eval_indices.resize(static_cast<size_t>(cfg.eval_max));

  for (int epoch = start_epoch; epoch < total_epochs; ++epoch) {
    const std::string phase = phase_name(cfg, epoch);
    opt.set_learning_rate(phase == "warmstart" ? cfg.optimizer.lr : lr_hrl);

    // Shuffle a fresh copy of the canonical order so a resumed run sees the
    // same permutation as an uninterrupted one.
    std::vector<int> order = split.train;
    for (size_t i = order.size(); i > 1; --i) {
      const size_t j = rng.below(i);
      std::swap(order[i - 1], order[j]);
    }

    model::TrainStats epoch_stats;
    size_t seen = 0;
    try {
      for (size_t begin = 0; begin < order.size(); begin += static_cast<size_t>(cfg.batch_size)) {
        const size_t end = std::min(order.size(), begin + static_cast<size_t>(cfg.batch_size));
        std::vector<model::TrainSample> batch;
        batch.reserve(end - begin);
        for (size_t i = begin; i < end; ++i)
          batch.push_back(ds.samples[static_cast<size_t>(order[i])]);

        model::TrainStats stats;
        if (phase == "warmstart") {
          stats = m.warmstart_step(batch, sig, opt);
        } else if (phase == "manager") {
          stats = m.train_manager_step(batch, sig, cfg.gamma_manager, opt, rng,
                                       cfg.weighted() ? model::HrlLoss::weighted
                                                      : model::HrlLoss::biased,
                                       cfg.norm_const);
        } else {
          stats = m.train_worker_step(batch, sig, cfg.gamma_worker, opt, rng,
                                      cfg.weighted() ? model::HrlLoss::weighted
                                                     : model::HrlLoss::biased,
                                      cfg.norm_const);
        }
        if (!std::isfinite(stats.loss))
          throw std::runtime_error("non-finite loss value " + std::to_string(stats.loss));
        const double w = static_cast<double>(end - begin);
        epoch_stats.loss += w * stats.loss;
        epoch_stats.mean_reward += w * stats.mean_reward;
        epoch_stats.token_accuracy += w * stats.token_accuracy;
        seen += end - begin;
      }
    } catch (const std::exception& e) {
      throw std::runtime_error("run_training: aborting at epoch " + std::to_string(epoch) +
                               " (" + phase + "): " + e.what());
    }
    const double inv = seen ? 1.0 / static_cast<double>(seen) : 0.0;
    epoch_stats.loss *= inv;
    epoch_stats.mean_reward *= inv;
    epoch_stats.token_accuracy *= inv;

    const EvalReport eval = evaluate_split(m, ds, eval_indices);
    {
      std::ofstream csv(csv_path, std::ios::app);
      csv << epoch << "," << phase << "," << fmt_double(epoch_stats.loss) << ","
          << fmt_double(epoch_stats.mean_reward) << "," << fmt_double(epoch_stats.token_accuracy)
          << "," << fmt_double(eval.bleu3) << "," << fmt_double(eval.bleu4) << ","
          << fmt_double(eval.meteor) << "," << eval.vocab_usage << "\n";
    }

    const EpochPaths paths = epoch_paths(cfg.out_dir, epoch);
    diff::save_checkpoint(paths.checkpoint, m.snapshot());
    diff::save_checkpoint(paths.state_bin, momentum_snapshot(m.params()));
    {
      nlohmann::json state;
      state["epoch_done"] = epoch;
      state["phase"] = phase;
      state["rng_state"] = std::to_string(rng.state());
      std::ofstream state_os(paths.state_json);
      state_os << state.dump(2) << "\n";
    }
    result.last_checkpoint = paths.checkpoint;
    result.epochs_completed = epoch + 1;
  }

  result.final_eval = evaluate_split(m, ds, split.val);
  return result;
}

}  // namespace capgen::harness
