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

#include <cmath>
#include <string>
#include <vector>

#include "capgen/diff/rng.hpp"
#include "capgen/metrics/bleu.hpp"
#include "capgen/metrics/meteor.hpp"
#include "capgen/metrics/stemmer.hpp"
#include "capgen/metrics/token.hpp"
#include "oracle/meteor_oracle.hpp"

using namespace capgen;
using metrics::Token;

namespace {

std::vector<Token> toks(std::initializer_list<const char*> words) {
  std::vector<Token> out;
  for (const char* w : words) out.emplace_back(w);
  return out;
}

std::vector<Token> random_tokens(diff::Rng& rng, const std::vector<Token>& alphabet, int max_len,
                                 int min_len = 1) {
  const int len = min_len + static_cast<int>(rng.below(static_cast<uint64_t>(max_len - min_len + 1)));
  std::vector<Token> out;
  for (int i = 0; i < len; ++i) out.push_back(alphabet[rng.below(alphabet.size())]);
  return out;
}

}  // namespace

TEST_CASE("tokenize basic rules") {
  CHECK(metrics::tokenize("A man plays guitar.") == toks({"a", "man", "plays", "guitar"}));
  CHECK(metrics::tokenize("") == std::vector<Token>{});
  CHECK(metrics::tokenize("The  CAT,  sat") == toks({"the", "cat", "sat"}));
  CHECK(metrics::tokenize("  ...  ") == std::vector<Token>{});
  CHECK(metrics::tokenize("don't stop") == toks({"don't", "stop"}));
}

TEST_CASE("porter stemmer hand-traced vectors") {
  const std::pair<const char*, const char*> vectors[] = {
      {"caresses", "caress"}, {"ponies", "poni"},     {"ties", "ti"},
      {"caress", "caress"},   {"cats", "cat"},        {"feed", "feed"},
      {"agreed", "agre"},     {"plastered", "plaster"}, {"bled", "bled"},
      {"motoring", "motor"},  {"sing", "sing"},       {"hopping", "hop"},
      {"tanned", "tan"},      {"falling", "fall"},    {"hissing", "hiss"},
      {"fizzed", "fizz"},     {"failing", "fail"},    {"filing", "file"},
      {"sized", "size"},      {"conflated", "conflat"}, {"troubled", "troubl"},
      {"happy", "happi"},     {"sky", "sky"},         {"relational", "relat"},
      {"conditional", "condit"}, {"rational", "ration"}, {"digitizer", "digit"},
      {"operator", "oper"},   {"feudalism", "feudal"}, {"hopefulness", "hope"},
      {"goodness", "good"},   {"electriciti", "electr"}, {"electrical", "electr"},
      {"revival", "reviv"},   {"allowance", "allow"}, {"inference", "infer"},
      {"airliner", "airlin"}, {"adjustable", "adjust"}, {"replacement", "replac"},
      {"adoption", "adopt"},  {"communism", "commun"}, {"activate", "activ"},
      {"effective", "effect"}, {"bowdlerize", "bowdler"}, {"probate", "probat"},
      {"rate", "rate"},       {"cease", "ceas"},      {"controll", "control"},
      {"roll", "roll"},       {"plays", "plai"},      {"playing", "plai"},
      {"played", "plai"},
  };
  for (const auto& [word, expected] : vectors) {
    CAPTURE(word);
    CHECK(metrics::porter_stem(word) == expected);
  }
}

TEST_CASE("porter stemmer conflates inflection families") {
  const std::vector<std::vector<const char*>> families = {
      {"plays", "playing", "played"}, {"spins", "spinning"},   {"jumps", "jumping", "jumped"},
      {"walks", "walking", "walked"}, {"rises", "rising"},     {"drifts", "drifting", "drifted"},
      {"glows", "glowing", "glowed"}, {"rolls", "rolling"},
  };
  for (const auto& family : families) {
    const std::string stem0 = metrics::porter_stem(family[0]);
    for (const char* w : family) {
      CAPTURE(w);
      CHECK(metrics::porter_stem(w) == stem0);
    }
  }
  // Short words and non-alphabetic strings pass through.
  CHECK(metrics::porter_stem("at") == "at");
  CHECK(metrics::porter_stem("a") == "a");
  CHECK(metrics::porter_stem("x9z") == "x9z");
}

TEST_CASE("align on identical and reversed pairs") {
  const auto id = metrics::align(toks({"the", "cat"}), toks({"the", "cat"}));
  CHECK(id.matches == 2);
  CHECK(id.chunks == 1);
  REQUIRE(id.pairs.size() == 2);
  CHECK(id.pairs[0].hyp_index == 0);
  CHECK(id.pairs[0].ref_index == 0);

  const auto rev = metrics::align(toks({"the", "cat"}), toks({"cat", "the"}));
  CHECK(rev.matches == 2);
  CHECK(rev.chunks == 2);
}

TEST_CASE("align stem stage") {
  metrics::MeteorParams with_stems;
  const auto a = metrics::align(toks({"plays"}), toks({"playing"}), with_stems);
  CHECK(a.matches == 1);
  CHECK(a.pairs.at(0).stem_match);

  metrics::MeteorParams no_stems;
  no_stems.enable_stemming = false;
  CHECK(metrics::align(toks({"plays"}), toks({"playing"}), no_stems).matches == 0);
}

TEST_CASE("align prefers exact matches before stems") {
  // "plays" could stem-match position 0 but must exact-match position 1.
  const auto a = metrics::align(toks({"plays"}), toks({"playing", "plays"}));
  REQUIRE(a.matches == 1);
  CHECK(a.pairs[0].ref_index == 1);
  CHECK_FALSE(a.pairs[0].stem_match);
}

TEST_CASE("align chunk minimality matches the exhaustive oracle") {
  const std::vector<Token> alphabet = {"a", "b", "c", "d", "e"};
  diff::Rng rng(2024);
  for (int it = 0; it < 3000; ++it) {
    const auto hyp = random_tokens(rng, alphabet, 6);
    const auto ref = random_tokens(rng, alphabet, 6);
    const auto got = metrics::align(hyp, ref);
    const auto expect = testing::oracle_align(hyp, ref, true);
    CAPTURE(it);
    REQUIRE(got.matches == expect.matches);
    REQUIRE(got.chunks == expect.min_chunks);
  }
}

TEST_CASE("align chunk minimality with stems in the mix") {
  const std::vector<Token> alphabet = {"plays", "playing", "played", "cat", "cats", "the"};
  diff::Rng rng(77);
  for (int it = 0; it < 800; ++it) {
    const auto hyp = random_tokens(rng, alphabet, 5);
    const auto ref = random_tokens(rng, alphabet, 5);
    const auto got = metrics::align(hyp, ref);
    const auto expect = testing::oracle_align(hyp, ref, true);
    CAPTURE(it);
    REQUIRE(got.matches == expect.matches);
    REQUIRE(got.chunks == expect.min_chunks);
  }
}

TEST_CASE("align tie-break is lexicographically smallest") {
  // Both refs are 'a'; pairing (0,0) is lexicographically first and both
  // choices give one chunk.
  const auto a = metrics::align(toks({"a"}), toks({"a", "a"}));
  REQUIRE(a.pairs.size() == 1);
  CHECK(a.pairs[0].ref_index == 0);
}

TEST_CASE("meteor score worked examples") {
  const auto same = metrics::meteor_score(toks({"the", "cat", "sat"}), toks({"the", "cat", "sat"}));
  CHECK(same.value == doctest::Approx(1.0 - 0.5 / 27.0).epsilon(1e-12));
  CHECK(same.precision == doctest::Approx(1.0));
  CHECK(same.recall == doctest::Approx(1.0));
  CHECK(same.fmean == doctest::Approx(1.0));

  CHECK(metrics::meteor_score(toks({"dog"}), toks({"cat"})).value == 0.0);

  const auto swapped = metrics::meteor_score(toks({"the", "cat"}), toks({"cat", "the"}));
  CHECK(swapped.value == doctest::Approx(0.5).epsilon(1e-12));

  CHECK(metrics::meteor_score({}, toks({"a"})).value == 0.0);
  CHECK(metrics::meteor_score(toks({"a"}), {}).value == 0.0);
}

TEST_CASE("meteor self-similarity and bounds") {
  const std::vector<Token> alphabet = {"a", "b", "c", "d", "e", "f", "g", "h"};
  diff::Rng rng(5);
  for (int it = 0; it < 500; ++it) {
    const auto x = random_tokens(rng, alphabet, 8);
    const auto score = metrics::meteor_score(x, x);
    CHECK(score.value >= 0.5 - 1e-12);
    CHECK(score.value <= 1.0 + 1e-12);
    if (x.size() >= 2) CHECK(score.value > 0.5);
    // Identical sequences always align contiguously.
    CHECK(score.fmean == doctest::Approx(1.0));
  }
  // All-distinct self-comparison hits the closed form 1 - gamma (1/m)^beta.
  const auto d = metrics::meteor_score(toks({"a", "b", "c", "d"}), toks({"a", "b", "c", "d"}));
  CHECK(d.value == doctest::Approx(1.0 - 0.5 * std::pow(0.25, 3.0)).epsilon(1e-12));
}

TEST_CASE("meteor permutation sensitivity only through the penalty") {
  const auto ref = toks({"a", "b", "c", "d", "e"});
  const auto fwd = metrics::meteor_score(toks({"a", "b", "c", "d", "e"}), ref);
  const auto perm = metrics::meteor_score(toks({"b", "a", "d", "c", "e"}), ref);
  CHECK(fwd.fmean == doctest::Approx(perm.fmean).epsilon(1e-12));
  CHECK(fwd.precision == doctest::Approx(perm.precision));
  CHECK(fwd.value > perm.value);  // extra chunks only increase the penalty
}

TEST_CASE("meteor in [0,1] on fuzzed pairs") {
  const std::vector<Token> alphabet = {"a", "b", "c", "plays", "playing"};
  diff::Rng rng(99);
  for (int it = 0; it < 1000; ++it) {
    const auto hyp = random_tokens(rng, alphabet, 7);
    const auto ref = random_tokens(rng, alphabet, 7);
    const double v = metrics::meteor_score(hyp, ref).value;
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
}

TEST_CASE("bleu worked examples") {
  const auto hyp = toks({"a", "b", "c"});
  CHECK(metrics::bleu_n(hyp, hyp, 1) == doctest::Approx(1.0));
  CHECK(metrics::bleu_n(hyp, hyp, 3) == doctest::Approx(1.0));
  CHECK(metrics::bleu_n(toks({"x", "y"}), toks({"a", "b"}), 1) == 0.0);
  CHECK(metrics::bleu_n(toks({"a", "b", "c"}), toks({"a", "b", "d"}), 2) ==
        doctest::Approx(std::sqrt(1.0 / 3.0)).epsilon(1e-9));
  CHECK_THROWS_AS(metrics::bleu_n(hyp, hyp, 0), std::invalid_argument);
}

TEST_CASE("bleu brevity penalty and clipping") {
  // Shorter hypothesis: p1 = 1, BP = exp(1 - 3/2).
  CHECK(metrics::bleu_n(toks({"a", "b"}), toks({"a", "b", "c"}), 1) ==
        doctest::Approx(std::exp(1.0 - 1.5)).epsilon(1e-12));
  // Repeated unigrams are clipped by the reference count: 2 of 3 count.
  CHECK(metrics::bleu_n(toks({"a", "a", "a"}), toks({"a", "a", "b"}), 1) ==
        doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  // Hypothesis shorter than n: no n-grams, score 0.
  CHECK(metrics::bleu_n(toks({"a"}), toks({"a", "b"}), 2) == 0.0);
  // Range check on fuzz.
  const std::vector<Token> alphabet = {"a", "b", "c"};
  diff::Rng rng(3);
  for (int it = 0; it < 300; ++it) {
    const auto h = random_tokens(rng, alphabet, 6);
    const auto r = random_tokens(rng, alphabet, 6);
    const double v = metrics::bleu_n(h, r, 4);
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
}

TEST_CASE("meteor value agrees with the oracle formula") {
  const std::vector<Token> alphabet = {"a", "b", "c", "d", "plays", "playing"};
  diff::Rng rng(12345);
  for (int it = 0; it < 500; ++it) {
    const auto hyp = random_tokens(rng, alphabet, 6);
    const auto ref = random_tokens(rng, alphabet, 6);
    const double got = metrics::meteor_score(hyp, ref).value;
    const double expect = testing::oracle_meteor(hyp, ref);
    CAPTURE(it);
    CHECK(got == doctest::Approx(expect).epsilon(1e-12));
  }
}
