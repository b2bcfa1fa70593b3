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

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "capgen/harness/compare.hpp"
#include "capgen/harness/grammar.hpp"
#include "capgen/harness/train_loop.hpp"

using nlohmann::json;
using namespace capgen;

namespace {

json load_json(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open config " + path);
  return json::parse(is);
}

harness::GrammarConfig grammar_from_json(const json& j) {
  harness::GrammarConfig g;
  g.n_sizes = j.value("n_sizes", g.n_sizes);
  g.n_colors = j.value("n_colors", g.n_colors);
  g.n_shapes = j.value("n_shapes", g.n_shapes);
  g.n_verbs = j.value("n_verbs", g.n_verbs);
  g.n_adverbs = j.value("n_adverbs", g.n_adverbs);
  g.d_audio = j.value("d_audio", g.d_audio);
  g.d_video = j.value("d_video", g.d_video);
  g.min_feat_len = j.value("min_feat_len", g.min_feat_len);
  g.max_feat_len = j.value("max_feat_len", g.max_feat_len);
  g.jitter = j.value("jitter", g.jitter);
  g.vocab_size = j.value("vocab_size", g.vocab_size);
  g.n_samples = j.value("n_samples", g.n_samples);
  return g;
}

int cmd_gen_data(const std::string& config_path, uint64_t seed, const std::string& out) {
  const harness::GrammarConfig g = grammar_from_json(load_json(config_path));
  const harness::Dataset ds = harness::generate_dataset(g, seed);
  harness::write_dataset(out, ds);
  std::printf("wrote %zu samples (vocab %d, d_audio %d, d_video %d) to %s\n", ds.samples.size(),
              ds.vocab.size(), ds.d_audio, ds.d_video, out.c_str());
  return 0;
}

int cmd_train(const std::string& config_path, int64_t seed_override, const std::string& out_override,
              const std::string& resume) {
  harness::ExperimentConfig cfg = harness::ExperimentConfig::from_json_file(config_path);
  if (seed_override >= 0) cfg.seed = static_cast<uint64_t>(seed_override);
  if (!out_override.empty()) cfg.out_dir = out_override;
  const harness::TrainResult result = harness::run_training(cfg, resume);
  std::printf("finished %d epochs; metrics: %s\n", result.epochs_completed,
              result.csv_path.c_str());
  std::printf("final val: bleu3 %.2f bleu4 %.2f meteor %.2f vocab_usage %d\n",
              result.final_eval.bleu3, result.final_eval.bleu4, result.final_eval.meteor,
              result.final_eval.vocab_usage);
  return 0;
}

int cmd_eval(const std::string& config_path, const std::string& checkpoint,
             const std::string& split, const std::string& out) {
  const harness::ExperimentConfig cfg = harness::ExperimentConfig::from_json_file(config_path);
  const harness::EvalReport report = harness::evaluate_checkpoint(cfg, checkpoint, split);
  std::printf("%s split (%d samples): bleu3 %.2f bleu4 %.2f meteor %.2f vocab_usage %d\n",
              split.c_str(), report.n_samples, report.bleu3, report.bleu4, report.meteor,
              report.vocab_usage);
  if (!out.empty()) {
    json j = {{"split", split},       {"n_samples", report.n_samples},
              {"bleu3", report.bleu3}, {"bleu4", report.bleu4},
              {"meteor", report.meteor}, {"vocab_usage", report.vocab_usage}};
    std::ofstream os(out);
    os << j.dump(2) << "\n";
  }
  return 0;
}

int cmd_compare(const std::string& config_path, std::string gt, std::string pred, double peak,
                double gamma, const std::string& out, const std::string& svg) {
  signal::SignalConfig sig;
  if (!config_path.empty()) {
    const json j = load_json(config_path);
    gt = j.value("gt", gt);
    pred = j.value("pred", pred);
    peak = j.value("peak", peak);
    gamma = j.value("gamma_worker", gamma);
    if (j.contains("signal")) {
      const auto& s = j["signal"];
      sig.label_smoothing = s.value("label_smoothing", sig.label_smoothing);
      sig.c_smooth = s.value("c_smooth", sig.c_smooth);
      sig.literal_denominator = s.value("literal_denominator", sig.literal_denominator);
    }
  }
  if (gt.empty() || pred.empty())
    throw std::runtime_error("compare-div needs --gt and --pred (or config entries)");
  const harness::DivergenceReport report =
      harness::compare_divergence(gt, pred, peak, sig, gamma);
  if (!out.empty()) harness::write_divergence_csv(report, out);
  if (!svg.empty()) harness::write_divergence_svg(report, svg);
  std::printf("tokens compared: %zu\n", report.rows.size());
  std::printf("standard KL: total %.6f mean %.6f\n", report.standard_total, report.standard_mean);
  std::printf("biased   KL: total %.6f mean %.6f\n", report.biased_total, report.biased_mean);
  std::printf("biased %s standard\n", report.biased_mean < report.standard_mean ? "<" : ">=");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"caption-training toolkit: synthetic data, training, evaluation, divergence "
               "comparison"};
  app.require_subcommand(1);

  std::string config, out, resume, checkpoint, split = "val", gt, pred, svg;
  int64_t seed = -1;
  double peak = 0.9, gamma = 0.0;

  auto* gen = app.add_subcommand("gen-data", "generate a synthetic dataset");
  gen->add_option("--config", config, "grammar config JSON")->required();
  gen->add_option("--seed", seed, "generation seed")->required();
  gen->add_option("--out", out, "output dataset file")->required();

  auto* train = app.add_subcommand("train", "run a training experiment");
  train->add_option("--config", config, "experiment config JSON")->required();
  train->add_option("--seed", seed, "override the config seed");
  train->add_option("--out", out, "override the output directory");
  train->add_option("--resume", resume, "checkpoint_epoch_N.bin to resume from");

  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  eval->add_option("--config", config, "experiment config JSON")->required();
  eval->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
  eval->add_option("--split", split, "train|val|all");
  eval->add_option("--out", out, "optional JSON report path");

  auto* cmp = app.add_subcommand("compare-div", "compare standard vs biased divergence");
  cmp->add_option("--config", config, "comparison config JSON (gt, pred, peak, signal)");
  cmp->add_option("--gt", gt, "ground-truth caption");
  cmp->add_option("--pred", pred, "predicted caption");
  cmp->add_option("--peak", peak, "model mass on the predicted token");
  cmp->add_option("--gamma", gamma, "worker discount for the rewards (0 = raw deltas)");
  cmp->add_option("--out", out, "per-token CSV path");
  cmp->add_option("--svg", svg, "optional bar-chart SVG path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_gen_data(config, static_cast<uint64_t>(seed), out);
    if (train->parsed()) return cmd_train(config, seed, out, resume);
    if (eval->parsed()) return cmd_eval(config, checkpoint, split, out);
    if (cmp->parsed()) return cmd_compare(config, gt, pred, peak, gamma, out, svg);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
