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

#include <string>
#include <string_view>
#include <vector>

namespace capgen::metrics {

/// A caption word: lowercased, non-empty, no whitespace. tokenize() is the
/// only producer and maintains the invariant.
using Token = std::string;

/// Lowercases, splits on whitespace, strips leading/trailing punctuation
/// from each piece and drops pieces that end up empty.
std::vector<Token> tokenize(std::string_view text);

}  // namespace capgen::metrics
