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

// One-off generator for the frozen test fixtures. Expected METEOR values
// come from the exhaustive-matching oracle, never from the library code, so
// the fixture file stays an independent check. The divergence pairs are
// verified for the expected direction before they are written.

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "capgen/diff/rng.hpp"
#include "capgen/harness/compare.hpp"
#include "capgen/metrics/token.hpp"
#include "meteor_oracle.hpp"

using namespace capgen;

namespace {

std::string join(const std::vector<std::string>& words) {
  std::string out;
  for (size_t i = 0; i < words.size(); ++i) {
    if (i) out += ' ';
    out += words[i];
  }
  return out;
}

int write_meteor_suite(const std::string& path) {
  std::vector<std::pair<std::string, std::string>> pairs = {
      // Worked examples and edge cases.
      {"the cat sat", "the cat sat"},
      {"dog", "cat"},
      {"the cat", "cat the"},
      {"a", "a b"},
      {"a b", "a b"},
      {"a", "a"},
      {"a b c d", "a b c d"},
      {"a b c d", "d c b a"},
      {"a b c d e f", "a b d c e f"},
      {"the the the", "the"},
      {"the", "the the the"},
      {"a b a b", "b a b a"},
      // Stem-stage cases.
      {"plays", "playing"},
      {"a man plays guitar", "a man playing guitar"},
      {"running dogs", "the dog runs"},
      {"played plays playing", "play played playing"},
      {"walking", "walked"},
      {"the man walked home", "the man walks home quickly"},
  };

  const std::vector<std::string> alphabet = {"the",  "a",      "man",    "dog",   "cat",
                                             "plays", "playing", "played", "guitar", "runs",
                                             "running", "sits",  "red",    "ball",  "big"};
  diff::Rng rng(991);
  while (pairs.size() < 56) {
    const auto draw = [&](int max_len) {
      const int len = 1 + static_cast<int>(rng.below(static_cast<uint64_t>(max_len)));
      std::vector<std::string> words;
      if (len > 6) {
        // Distinct tokens keep the oracle enumeration tiny.
        std::vector<std::string> pool = alphabet;
        for (int i = 0; i < len; ++i) {
          const size_t j = rng.below(pool.size());
          words.push_back(pool[j]);
          pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(j));
        }
      } else {
        for (int i = 0; i < len; ++i)
          words.push_back(alphabet[rng.below(static_cast<uint64_t>(8))]);
      }
      return words;
    };
    pairs.emplace_back(join(draw(10)), join(draw(10)));
  }

  std::ofstream os(path, std::ios::trunc);
  if (!os) {
    std::fprintf(stderr, "cannot open %s\n", path.c_str());
    return 1;
  }
  for (const auto& [hyp, ref] : pairs) {
    const double value = testing::oracle_meteor(metrics::tokenize(hyp), metrics::tokenize(ref));
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    os << hyp << "\t" << ref << "\t" << buf << "\n";
  }
  std::printf("wrote %zu meteor fixtures to %s\n", pairs.size(), path.c_str());
  return 0;
}

int write_divergence_pairs(const std::string& path) {
  // 10 adjacent-swap cases and 10 shared-stem cases.
  const std::vector<std::pair<std::string, std::string>> pairs = {
      {"a man plays the guitar on stage", "a man the plays guitar on stage"},
      {"the small red cube then drifts slowly", "the red small cube then drifts slowly"},
      {"a dog runs across the green field", "a dog across runs the green field"},
      {"the band starts the show tonight", "the band the starts show tonight"},
      {"a woman reads a long book quietly", "a woman reads a long quietly book"},
      {"the cat sat on the warm mat", "the cat on sat the warm mat"},
      {"two birds fly over the old bridge", "two birds fly the over old bridge"},
      {"the chef cooks fresh pasta every night", "the chef fresh cooks pasta every night"},
      {"a child draws a bright yellow sun", "a child draws bright a yellow sun"},
      {"the train leaves the busy station now", "the train the leaves busy station now"},
      {"a man plays a guitar", "a man played a guitar"},
      {"the dog runs in the park", "the dog running in the park"},
      {"she walks to the market", "she walked to the market"},
      {"the crowd cheers loudly tonight", "the crowd cheered loudly tonight"},
      {"he jumps over the fence", "he jumped over the fence"},
      {"the singer performs a new song", "the singer performed a new song"},
      {"they dance in the rain", "they danced in the rain"},
      {"the painter mixes bright colors", "the painter mixed bright colors"},
      {"a girl swims across the lake", "a girl swimming across the lake"},
      {"the farmer plants tall green corn", "the farmer planted tall green corn"},
  };

  signal::SignalConfig sig;
  int bad = 0;
  for (const auto& [gt, pred] : pairs) {
    const auto report = harness::compare_divergence(gt, pred, 0.9, sig);
    if (!(report.biased_mean < report.standard_mean)) {
      std::fprintf(stderr, "direction violated: gt='%s' pred='%s' (std %.6f biased %.6f)\n",
                   gt.c_str(), pred.c_str(), report.standard_mean, report.biased_mean);
      ++bad;
    }
  }
  if (bad) return 1;

  std::ofstream os(path, std::ios::trunc);
  for (const auto& [gt, pred] : pairs) os << gt << "\t" << pred << "\n";
  std::printf("wrote %zu divergence pairs to %s\n", pairs.size(), path.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::fprintf(stderr, "usage: %s <fixtures dir>\n", argv[0]);
    return 2;
  }
  const std::string dir = argv[1];
  if (int rc = write_meteor_suite(dir + "/meteor_suite.tsv")) return rc;
  if (int rc = write_divergence_pairs(dir + "/divergence_pairs.tsv")) return rc;
  return 0;
}
