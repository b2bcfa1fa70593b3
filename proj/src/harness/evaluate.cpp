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

#include "capgen/harness/evaluate.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

#include "capgen/diff/checkpoint.hpp"
#include "capgen/diff/rng.hpp"
#include "capgen/harness/grammar.hpp"
#include "capgen/metrics/bleu.hpp"
#include "capgen/metrics/meteor.hpp"

namespace capgen::harness {

EvalReport score_captions(const Vocabulary& vocab,
                          const std::vector<std::pair<std::vector<int>, std::vector<int>>>&
                              decoded_and_reference) {
  EvalReport report;
  std::set<int> used_tokens;
  double bleu3 = 0.0, bleu4 = 0.0, meteor = 0.0;
  for (const auto& [decoded, reference] : decoded_and_reference) {
    for (int id : decoded)
      if (id >= model::SpecialTokens::count) used_tokens.insert(id);
    const auto hyp = vocab.surfaces(decoded);
    const auto ref = vocab.surfaces(reference);
    bleu3 += metrics::bleu_n(hyp, ref, 3);
    bleu4 += metrics::bleu_n(hyp, ref, 4);
    meteor += metrics::meteor_score(hyp, ref).value;
  }
  report.n_samples = static_cast<int>(decoded_and_reference.size());
  if (report.n_samples > 0) {
    const double inv = 100.0 / static_cast<double>(report.n_samples);
    report.bleu3 = bleu3 * inv;
    report.bleu4 = bleu4 * inv;
    report.meteor = meteor * inv;
  }
  report.vocab_usage = static_cast<int>(used_tokens.size());
  return report;
}

EvalReport evaluate_split(const model::CaptionModel& m, const Dataset& ds,
                          const std::vector<int>& indices) {
  std::vector<std::pair<std::vector<int>, std::vector<int>>> pairs;
  pairs.reserve(indices.size());
  for (int idx : indices) {
    const auto& s = ds.samples[static_cast<size_t>(idx)];
    pairs.emplace_back(m.greedy_decode(s.audio, s.video, m.config().max_len), s.caption);
  }
  return score_captions(ds.vocab, pairs);
}

Split split_dataset(size_t n_samples, double val_fraction, uint64_t seed) {
  std::vector<int> order(n_samples);
  for (size_t i = 0; i < n_samples; ++i) order[i] = static_cast<int>(i);
  diff::Rng rng(seed ^ 0x5b1d5b1dULL);
  for (size_t i = n_samples; i > 1; --i) {
    const size_t j = rng.below(i);
    std::swap(order[i - 1], order[j]);
  }
  const size_t n_val = std::max<size_t>(1, static_cast<size_t>(val_fraction * n_samples));
  Split split;
  split.val.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
  split.train.assign(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
  return split;
}

model::CaptionModel build_model(const ExperimentConfig& cfg, const Dataset& ds) {
  model::ModelConfig net = cfg.net;
  net.fusion = cfg.fusion();
  net.vocab_size = ds.vocab.size();
  net.seed = cfg.seed;
  if (net.d_audio_in == 0) net.d_audio_in = ds.d_audio;
  if (net.d_video_in == 0) net.d_video_in = ds.d_video;
  if (net.fusion == model::FusionMode::audio_only) net.d_video_in = 0;
  if (net.fusion == model::FusionMode::vision_only) net.d_audio_in = 0;
  int max_caption = 0;
  for (const auto& s : ds.samples) max_caption = std::max(max_caption, static_cast<int>(s.caption.size()));
  net.max_len = std::max(net.max_len, max_caption + 2);
  return model::CaptionModel(net, ds.vocab.words, grammar_critic());
}

EvalReport evaluate_checkpoint(const ExperimentConfig& cfg, const std::string& checkpoint_path,
                               const std::string& split_name) {
  const Dataset ds = read_dataset(cfg.dataset);
  model::CaptionModel m = build_model(cfg, ds);
  m.restore(diff::load_checkpoint(checkpoint_path));
  const Split split = split_dataset(ds.samples.size(), cfg.val_fraction, cfg.seed);
  std::vector<int> indices;
  if (split_name == "val") {
    indices = split.val;
  } else if (split_name == "train") {
    indices = split.train;
  } else if (split_name == "all") {
    indices.resize(ds.samples.size());
    for (size_t i = 0; i < ds.samples.size(); ++i) indices[i] = static_cast<int>(i);
  } else {
    throw std::invalid_argument("evaluate: unknown split '" + split_name + "'");
  }
  return evaluate_split(m, ds, indices);
}

}  // namespace capgen::harness
