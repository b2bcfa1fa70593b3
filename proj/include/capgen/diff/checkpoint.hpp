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
#include <utility>
#include <vector>

#include "capgen/diff/tensor.hpp"

namespace capgen::diff {

using NamedTensors = std::vector<std::pair<std::string, Tensor>>;

/// Little-endian binary checkpoint: 8-byte magic "CGCKPT01", u32 entry count,
/// then per entry u32 name length, name bytes, u32 rank, u32 extents, raw f64
/// payload.
void save_checkpoint(const std::string& path, const NamedTensors& tensors);
NamedTensors load_checkpoint(const std::string& path);

}  // namespace capgen::diff
