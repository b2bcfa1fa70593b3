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
#include <vector>

#include "capgen/model/model.hpp"

namespace capgen::harness {

/// Token table shared between a dataset and the models trained on it.
/// Ids 0..2 are the reserved pad/start/end markers.
struct Vocabulary {
  std::vector<std::string> words;

  int size() const { return static_cast<int>(words.size()); }
  const std::string& surface(int id) const { return words[static_cast<size_t>(id)]; }
  int id_of(const std::string& w) const;
  std::vector<std::string> surfaces(const std::vector<int>& ids) const;
};

struct Dataset {
  int d_audio = 0;
  int d_video = 0;
  Vocabulary vocab;
  std::vector<model::TrainSample> samples;
};

/// Binary dataset file: 8-byte magic "CGDATA01", u32 version, u32 d_audio,
/// u32 d_video, u32 vocab size, u64 sample count, the vocabulary as
/// length-prefixed strings, then length-prefixed records of raw 64-bit
/// feature values and token-id lists. Little-endian throughout.
void write_dataset(const std::string& path, const Dataset& ds);
Dataset read_dataset(const std::string& path);

}  // namespace capgen::harness
