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

#include "capgen/harness/grammar.hpp"

#include <cmath>
#include <stdexcept>

#include "capgen/diff/rng.hpp"

namespace capgen::harness {

const char* const kDelimiter = "then";

namespace {

const char* const kSizes[] = {"small", "big", "tiny", "huge", "wide", "flat", "tall", "thin"};
const char* const kColors[] = {"red",  "blue",  "green", "gray",  "pink",
                               "amber", "teal", "violet", "black", "white"};
const char* const kShapes[] = {"cube", "ball", "cone", "ring",  "disk",
                               "prism", "torus", "block", "slab", "wedge"};
const char* const kVerbs[] = {"spins", "drifts", "rises",  "falls",  "glows",  "fades",
                              "shakes", "rolls",  "slides", "bounces", "turns", "hums"};
const char* const kAdverbs[] = {"slowly", "quickly", "gently", "wildly",
                                "softly", "steadily", "evenly", "sharply"};

template <size_t N>
constexpr int capacity(const char* const (&)[N]) {
  return static_cast<int>(N);
}

using Prototypes = std::vector<std::vector<double>>;

Prototypes make_prototypes(diff::Rng& rng, int count, int dim) {
  Prototypes protos(static_cast<size_t>(count));
  for (auto& p : protos) {
    p.resize(static_cast<size_t>(dim));
    for (double& v : p) v = rng.normal();
  }
  return protos;
}

}  // namespace

void GrammarConfig::validate() const {
  if (n_sizes < 1 || n_sizes > capacity(kSizes) || n_colors < 1 || n_colors > capacity(kColors) ||
      n_shapes < 1 || n_shapes > capacity(kShapes) || n_verbs < 1 || n_verbs > capacity(kVerbs) ||
      n_adverbs < 1 || n_adverbs > capacity(kAdverbs))
    throw std::invalid_argument("GrammarConfig: attribute count out of range");
  if (d_audio < 1 || d_video < 1)
    throw std::invalid_argument("GrammarConfig: feature dims must be positive");
  if (min_feat_len < 1 || max_feat_len < min_feat_len)
    throw std::invalid_argument("GrammarConfig: bad feature length range");
  if (jitter < 0.0) throw std::invalid_argument("GrammarConfig: jitter must be >= 0");
  if (n_samples < 1) throw std::invalid_argument("GrammarConfig: n_samples must be positive");
  const int terminals =
      model::SpecialTokens::count + 2 + n_sizes + n_colors + n_shapes + n_verbs + n_adverbs;
  if (vocab_size < terminals)
    throw std::invalid_argument("GrammarConfig: vocab_size smaller than the terminal count");
}

rewards::CriticRule grammar_critic() { return rewards::CriticRule{{kDelimiter}}; }

Dataset generate_dataset(const GrammarConfig& cfg, uint64_t seed) {
  cfg.validate();
  diff::Rng rng(seed);

  Dataset ds;
  ds.d_audio = cfg.d_audio;
  ds.d_video = cfg.d_video;
  auto& words = ds.vocab.words;
  words = {"<pad>", "<s>", "</s>", "the", kDelimiter};
  const int size_base = ds.vocab.size();
  for (int i = 0; i < cfg.n_sizes; ++i) words.push_back(kSizes[i]);
  const int color_base = ds.vocab.size();
  for (int i = 0; i < cfg.n_colors; ++i) words.push_back(kColors[i]);
  const int shape_base = ds.vocab.size();
  for (int i = 0; i < cfg.n_shapes; ++i) words.push_back(kShapes[i]);
  const int verb_base = ds.vocab.size();
  for (int i = 0; i < cfg.n_verbs; ++i) words.push_back(kVerbs[i]);
  const int adverb_base = ds.vocab.size();
  for (int i = 0; i < cfg.n_adverbs; ++i) words.push_back(kAdverbs[i]);
  while (ds.vocab.size() < cfg.vocab_size)
    words.push_back("filler" + std::to_string(ds.vocab.size()));

  const Prototypes p_size = make_prototypes(rng, cfg.n_sizes, cfg.d_video);
  const Prototypes p_color = make_prototypes(rng, cfg.n_colors, cfg.d_video);
  const Prototypes p_shape = make_prototypes(rng, cfg.n_shapes, cfg.d_video);
  const Prototypes p_verb = make_prototypes(rng, cfg.n_verbs, cfg.d_audio);
  const Prototypes p_adverb = make_prototypes(rng, cfg.n_adverbs, cfg.d_audio);

  const int the_id = 3;
  const int then_id = 4;
  const double inv_sqrt3 = 1.0 / std::sqrt(3.0);
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);

  ds.samples.reserve(static_cast<size_t>(cfg.n_samples));
  for (int n = 0; n < cfg.n_samples; ++n) {
    const int c_size = static_cast<int>(rng.below(static_cast<uint64_t>(cfg.n_sizes)));
    const int c_color = static_cast<int>(rng.below(static_cast<uint64_t>(cfg.n_colors)));
    const int c_shape = static_cast<int>(rng.below(static_cast<uint64_t>(cfg.n_shapes)));
    const int c_verb = static_cast<int>(rng.below(static_cast<uint64_t>(cfg.n_verbs)));
    const int c_adverb = static_cast<int>(rng.below(static_cast<uint64_t>(cfg.n_adverbs)));
    const int len_range = cfg.max_feat_len - cfg.min_feat_len + 1;
    const int l_v = cfg.min_feat_len + static_cast<int>(rng.below(static_cast<uint64_t>(len_range)));
    const int l_a = cfg.min_feat_len + static_cast<int>(rng.below(static_cast<uint64_t>(len_range)));

    model::TrainSample s;
    s.video = diff::Tensor({l_v, cfg.d_video});
    for (int r = 0; r < l_v; ++r)
      for (int c = 0; c < cfg.d_video; ++c)
        s.video.at(r, c) =
            inv_sqrt3 * (p_size[static_cast<size_t>(c_size)][static_cast<size_t>(c)] +
                         p_color[static_cast<size_t>(c_color)][static_cast<size_t>(c)] +
                         p_shape[static_cast<size_t>(c_shape)][static_cast<size_t>(c)]) +
            cfg.jitter * rng.normal();
    s.audio = diff::Tensor({l_a, cfg.d_audio});
    for (int r = 0; r < l_a; ++r)
      for (int c = 0; c < cfg.d_audio; ++c)
        s.audio.at(r, c) =
            inv_sqrt2 * (p_verb[static_cast<size_t>(c_verb)][static_cast<size_t>(c)] +
                         p_adverb[static_cast<size_t>(c_adverb)][static_cast<size_t>(c)]) +
            cfg.jitter * rng.normal();

    s.caption = {the_id,        size_base + c_size, color_base + c_color, shape_base + c_shape,
                 then_id,       verb_base + c_verb, adverb_base + c_adverb};
    s.bounds = rewards::critic_boundaries(ds.vocab.surfaces(s.caption), grammar_critic());
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

}  // namespace capgen::harness
