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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "capgen/harness/compare.hpp"
#include "capgen/harness/grammar.hpp"
#include "capgen/harness/train_loop.hpp"
#include "capgen/metrics/bleu.hpp"
#include "capgen/metrics/meteor.hpp"

using namespace capgen;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

harness::GrammarConfig small_grammar(int samples, double jitter = 0.0) {
  harness::GrammarConfig g;
  g.n_samples = samples;
  g.jitter = jitter;
  g.vocab_size = 64;
  g.d_audio = 6;
  g.d_video = 8;
  return g;
}

}  // namespace

TEST_CASE("grammar generation is deterministic and well-formed") {
  const auto cfg = small_grammar(50);
  const auto tmp = temp_dir("capgen_grammar_test");
  harness::write_dataset((tmp / "a.bin").string(), harness::generate_dataset(cfg, 11));
  harness::write_dataset((tmp / "b.bin").string(), harness::generate_dataset(cfg, 11));
  CHECK(slurp(tmp / "a.bin") == slurp(tmp / "b.bin"));
  harness::write_dataset((tmp / "c.bin").string(), harness::generate_dataset(cfg, 12));
  CHECK(slurp(tmp / "a.bin") != slurp(tmp / "c.bin"));

  const auto ds = harness::generate_dataset(cfg, 11);
  REQUIRE(ds.samples.size() == 50);
  const auto critic = harness::grammar_critic();
  for (const auto& s : ds.samples) {
    REQUIRE(s.caption.size() == 7);
    // Exactly one delimiter, so exactly two segments.
    int delims = 0;
    for (int id : s.caption)
      if (critic.is_delimiter(ds.vocab.surface(id))) ++delims;
    CHECK(delims == 1);
    CHECK(s.bounds.starts == std::vector<int>{0, 5});
    CHECK(s.audio.rows() >= cfg.min_feat_len);
    CHECK(s.audio.rows() <= cfg.max_feat_len);
    CHECK(s.audio.cols() == cfg.d_audio);
    CHECK(s.video.cols() == cfg.d_video);
  }
  fs::remove_all(tmp);
}

TEST_CASE("noise-free features determine the caption clauses") {
  const auto ds = harness::generate_dataset(small_grammar(120), 3);
  // Same video feature row => same subject clause; same audio row => same
  // action clause.
  std::map<std::vector<double>, std::vector<int>> video_to_subject, audio_to_action;
  for (const auto& s : ds.samples) {
    std::vector<double> vkey(s.video.data(), s.video.data() + s.video.cols());
    const std::vector<int> subject(s.caption.begin(), s.caption.begin() + 4);
    const auto [vit, vnew] = video_to_subject.try_emplace(std::move(vkey), subject);
    if (!vnew) CHECK(vit->second == subject);
    std::vector<double> akey(s.audio.data(), s.audio.data() + s.audio.cols());
    const std::vector<int> action(s.caption.begin() + 5, s.caption.end());
    const auto [ait, anew] = audio_to_action.try_emplace(std::move(akey), action);
    if (!anew) CHECK(ait->second == action);
  }
  // With 120 draws over 4*5*5 subject classes, collisions must exist.
  CHECK(video_to_subject.size() < ds.samples.size());
}

TEST_CASE("dataset file round trip") {
  const auto tmp = temp_dir("capgen_dataset_test");
  const auto ds = harness::generate_dataset(small_grammar(20), 5);
  const std::string path = (tmp / "ds.bin").string();
  harness::write_dataset(path, ds);
  const auto loaded = harness::read_dataset(path);
  REQUIRE(loaded.samples.size() == ds.samples.size());
  CHECK(loaded.vocab.words == ds.vocab.words);
  CHECK(loaded.d_audio == ds.d_audio);
  for (size_t i = 0; i < ds.samples.size(); ++i) {
    CHECK(loaded.samples[i].caption == ds.samples[i].caption);
    CHECK(loaded.samples[i].bounds.starts == ds.samples[i].bounds.starts);
    REQUIRE(loaded.samples[i].audio.shape() == ds.samples[i].audio.shape());
    for (size_t k = 0; k < ds.samples[i].audio.size(); ++k)
      CHECK(loaded.samples[i].audio[k] == ds.samples[i].audio[k]);
  }
  CHECK_THROWS_AS(harness::read_dataset((tmp / "missing.bin").string()), std::runtime_error);
  fs::remove_all(tmp);
}

TEST_CASE("experiment config parsing and validation") {
  const std::string text = R"({
    "mode": "bmhrl_weighted", "seed": 9, "dataset": "x.bin", "out_dir": "out",
    "epochs_warmstart": 3, "epochs_hrl": 2, "batch_size": 4,
    "gamma_worker": 0.6, "gamma_manager": 0.9, "norm_const": 2.5,
    "optimizer": {"lr": 0.1, "momentum": 0.8, "lr_hrl": 0.02},
    "signal": {"label_smoothing": 0.25, "c_smooth": 0.2},
    "model": {"d_latent": 24, "heads": 3, "layers": 2, "d_goal": 4}
  })";
  const auto cfg = harness::ExperimentConfig::from_json_text(text);
  CHECK(cfg.weighted());
  CHECK(cfg.hrl_enabled());
  CHECK(cfg.gamma_manager == 0.9);
  CHECK(cfg.sig.label_smoothing == 0.25);
  CHECK(cfg.net.d_latent == 24);
  // The weighted variant defaults to a clamped advantage.
  REQUIRE(cfg.sig.eta_clamp.has_value());
  CHECK(cfg.sig.eta_clamp->first == 0.0);
  CHECK(cfg.sig.eta_clamp->second == 1.0);

  // Round trip through the echo format.
  const auto cfg2 = harness::ExperimentConfig::from_json_text(cfg.to_json_text());
  CHECK(cfg2.mode == cfg.mode);
  CHECK(cfg2.optimizer.lr_hrl == cfg.optimizer.lr_hrl);

  CHECK_THROWS_AS(harness::ExperimentConfig::from_json_text(R"({"mode": "nope"})"),
                  std::invalid_argument);
  CHECK_THROWS_AS(harness::ExperimentConfig::from_json_text(
                      R"({"mode": "audio_only", "model": {"d_video_in": 32}})"),
                  std::invalid_argument);
  CHECK_THROWS_AS(harness::ExperimentConfig::from_json_text(
                      R"({"mode": "vision_only", "model": {"d_audio_in": 16}})"),
                  std::invalid_argument);
  CHECK_NOTHROW(harness::ExperimentConfig::from_json_text(R"({"mode": "audio_only"})"));
}

TEST_CASE("split is deterministic, disjoint and covers the dataset") {
  const auto a = harness::split_dataset(100, 0.2, 7);
  const auto b = harness::split_dataset(100, 0.2, 7);
  CHECK(a.train == b.train);
  CHECK(a.val == b.val);
  CHECK(a.val.size() == 20);
  std::vector<bool> seen(100, false);
  for (int i : a.train) seen[static_cast<size_t>(i)] = true;
  for (int i : a.val) {
    CHECK(!seen[static_cast<size_t>(i)]);
    seen[static_cast<size_t>(i)] = true;
  }
  for (bool s : seen) CHECK(s);
  const auto c = harness::split_dataset(100, 0.2, 8);
  CHECK(a.val != c.val);
}

TEST_CASE("score_captions matches direct metric calls") {
  const auto ds = harness::generate_dataset(small_grammar(10), 21);
  std::vector<std::pair<std::vector<int>, std::vector<int>>> pairs;
  for (const auto& s : ds.samples) pairs.emplace_back(s.caption, s.caption);
  const auto self = harness::score_captions(ds.vocab, pairs);
  CHECK(self.bleu3 == doctest::Approx(100.0));
  CHECK(self.bleu4 == doctest::Approx(100.0));
  CHECK(self.meteor > 95.0);

  // Degenerate constant output: tiny vocabulary usage.
  std::vector<std::pair<std::vector<int>, std::vector<int>>> degenerate;
  for (const auto& s : ds.samples) degenerate.emplace_back(std::vector<int>{5, 5}, s.caption);
  const auto deg = harness::score_captions(ds.vocab, degenerate);
  CHECK(deg.vocab_usage <= 2);

  // Internal consistency with the metrics module on mixed outputs.
  std::vector<std::pair<std::vector<int>, std::vector<int>>> mixed;
  for (size_t i = 0; i < ds.samples.size(); ++i) {
    auto decoded = ds.samples[i].caption;
    if (i % 2 == 0 && decoded.size() > 2) std::swap(decoded[1], decoded[2]);
    mixed.emplace_back(decoded, ds.samples[i].caption);
  }
  const auto report = harness::score_captions(ds.vocab, mixed);
  double bleu3 = 0.0, meteor = 0.0;
  for (const auto& [dec, ref] : mixed) {
    bleu3 += metrics::bleu_n(ds.vocab.surfaces(dec), ds.vocab.surfaces(ref), 3);
    meteor += metrics::meteor_score(ds.vocab.surfaces(dec), ds.vocab.surfaces(ref)).value;
  }
  CHECK(report.bleu3 == doctest::Approx(100.0 * bleu3 / mixed.size()).epsilon(1e-12));
  CHECK(report.meteor == doctest::Approx(100.0 * meteor / mixed.size()).epsilon(1e-12));
}

TEST_CASE("compare divergence identities and directions") {
  signal::SignalConfig sig;
  const auto same = harness::compare_divergence("a man plays guitar", "a man plays guitar", 0.9, sig);
  CHECK(same.biased_total == doctest::Approx(same.standard_total));

  const auto swapped =
      harness::compare_divergence("a man plays guitar now", "a man guitar plays now", 0.9, sig);
  CHECK(swapped.biased_total < swapped.standard_total);
  CHECK(swapped.rows[2].match_kind == "exact");
  CHECK(swapped.rows[2].match_ref_index == 3);

  const auto stems =
      harness::compare_divergence("a man plays a guitar", "a man played a guitar", 0.9, sig);
  CHECK(stems.biased_total < stems.standard_total);
  CHECK(stems.rows[2].match_kind == "stem");

  // Stemming off: the changed token no longer matches, the reward trace
  // flattens, and the advantage shrinks.
  CHECK_THROWS_AS(harness::compare_divergence("", "a b", 0.9, sig), std::invalid_argument);
  CHECK_THROWS_AS(harness::compare_divergence("a b", "a b", 1.5, sig), std::invalid_argument);

  const auto tmp = temp_dir("capgen_compare_test");
  harness::write_divergence_csv(swapped, (tmp / "out.csv").string());
  harness::write_divergence_svg(swapped, (tmp / "out.svg").string());
  const std::string csv = slurp(tmp / "out.csv");
  CHECK(csv.find("standard_kl") != std::string::npos);
  CHECK(slurp(tmp / "out.svg").find("<svg") != std::string::npos);
  fs::remove_all(tmp);
}

TEST_CASE("training loop end to end, reproducible, bmh skips fine-tuning") {
  const auto tmp = temp_dir("capgen_train_test");
  const auto ds = harness::generate_dataset(small_grammar(40), 2);
  const std::string data_path = (tmp / "data.bin").string();
  harness::write_dataset(data_path, ds);

  harness::ExperimentConfig cfg;
  cfg.mode = "bmhrl";
  cfg.seed = 3;
  cfg.dataset = data_path;
  cfg.out_dir = (tmp / "run_a").string();
  cfg.epochs_warmstart = 1;
  cfg.epochs_hrl = 2;
  cfg.batch_size = 8;
  cfg.net.d_latent = 16;
  cfg.net.heads = 2;
  cfg.net.layers = 1;
  cfg.net.d_text = 8;
  cfg.net.d_goal = 4;
  cfg.optimizer.lr = 0.05;

  const auto res_a = harness::run_training(cfg);
  CHECK(res_a.epochs_completed == 3);
  CHECK(fs::exists(res_a.last_checkpoint));
  {
    std::ifstream csv(res_a.csv_path);
    std::string line;
    std::vector<std::string> lines;
    while (std::getline(csv, line)) lines.push_back(line);
    REQUIRE(lines.size() == 4);  // header + 3 epochs
    CHECK(lines[1].find("warmstart") != std::string::npos);
    CHECK(lines[2].find("manager") != std::string::npos);
    CHECK(lines[3].find("worker") != std::string::npos);
  }

  cfg.out_dir = (tmp / "run_b").string();
  const auto res_b = harness::run_training(cfg);
  CHECK(slurp(res_a.csv_path) == slurp(res_b.csv_path));
  CHECK(slurp(res_a.last_checkpoint) == slurp(res_b.last_checkpoint));

  // Evaluating the final checkpoint reproduces the final report.
  const auto eval = harness::evaluate_checkpoint(cfg, res_b.last_checkpoint, "val");
  CHECK(eval.meteor == doctest::Approx(res_b.final_eval.meteor));
  CHECK(eval.n_samples == res_b.final_eval.n_samples);

  cfg.mode = "bmh";
  cfg.out_dir = (tmp / "run_c").string();
  const auto res_c = harness::run_training(cfg);
  CHECK(res_c.epochs_completed == 1);  // phase 2 skipped entirely

  // Resuming from the epoch-1 checkpoint reproduces epoch 2 bitwise.
  cfg.mode = "bmhrl";
  cfg.out_dir = (tmp / "run_d").string();
  fs::create_directories(cfg.out_dir);
  for (const char* name : {"checkpoint_epoch_1.bin", "trainstate_epoch_1.bin",
                           "trainstate_epoch_1.json"})
    fs::copy_file(tmp / "run_a" / name, fs::path(cfg.out_dir) / name);
  {
    std::ifstream full_csv(res_a.csv_path);
    std::ofstream head_csv(fs::path(cfg.out_dir) / "metrics.csv");
    std::string line;
    for (int i = 0; i < 3 && std::getline(full_csv, line); ++i) head_csv << line << "\n";
  }
  const auto res_d = harness::run_training(
      cfg, (fs::path(cfg.out_dir) / "checkpoint_epoch_1.bin").string());
  CHECK(slurp(res_a.csv_path) == slurp(res_d.csv_path));
  CHECK(slurp(res_a.last_checkpoint) == slurp(res_d.last_checkpoint));

  // The weighted variant trains end to end as well.
  cfg.mode = "bmhrl_weighted";
  cfg.sig.eta_clamp = {0.0, 1.0};
  cfg.norm_const = 1.5;
  cfg.out_dir = (tmp / "run_e").string();
  const auto res_e = harness::run_training(cfg);
  CHECK(res_e.epochs_completed == 3);
  CHECK(fs::exists(res_e.last_checkpoint));

  fs::remove_all(tmp);
}
