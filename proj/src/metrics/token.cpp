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

#include "capgen/metrics/token.hpp"

#include <cctype>

namespace capgen::metrics {

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> out;
  size_t i = 0;
  const size_t n = text.size();
  while (i < n) {
    while (i < n && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    size_t j = i;
    while (j < n && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    if (j > i) {
      size_t a = i, b = j;
      while (a < b && std::ispunct(static_cast<unsigned char>(text[a]))) ++a;
      while (b > a && std::ispunct(static_cast<unsigned char>(text[b - 1]))) --b;
      if (b > a) {
        Token t;
        t.reserve(b - a);
        for (size_t p = a; p < b; ++p)
          t.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(text[p]))));
        out.push_back(std::move(t));
      }
    }
    i = j;
  }
  return out;
}

}  // namespace capgen::metrics
