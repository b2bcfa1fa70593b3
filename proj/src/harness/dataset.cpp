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

#include "capgen/harness/dataset.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

static_assert(std::endian::native == std::endian::little,
              "dataset format assumes a little-endian host");

namespace capgen::harness {

int Vocabulary::id_of(const std::string& w) const {
  for (size_t i = 0; i < words.size(); ++i)
    if (words[i] == w) return static_cast<int>(i);
  return -1;
}

std::vector<std::string> Vocabulary::surfaces(const std::vector<int>& ids) const {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (int id : ids) out.push_back(surface(id));
  return out;
}

namespace {

constexpr char kMagic[8] = {'C', 'G', 'D', 'A', 'T', 'A', '0', '1'};
constexpr uint32_t kVersion = 1;

void write_u32(std::ostream& os, uint32_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
void write_u64(std::ostream& os, uint64_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
uint32_t read_u32(std::istream& is) {
  uint32_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}
uint64_t read_u64(std::istream& is) {
  uint64_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}

void write_features(std::ostream& os, const diff::Tensor& t) {
  os.write(reinterpret_cast<const char*>(t.data()),
           static_cast<std::streamsize>(t.size() * sizeof(double)));
}

diff::Tensor read_features(std::istream& is, int rows, int cols) {
  std::vector<double> data(static_cast<size_t>(rows) * static_cast<size_t>(cols));
  is.read(reinterpret_cast<char*>(data.data()),
          static_cast<std::streamsize>(data.size() * sizeof(double)));
  return diff::Tensor({rows, cols}, std::move(data));
}

}  // namespace

void write_dataset(const std::string& path, const Dataset& ds) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("write_dataset: cannot open " + path);
  os.write(kMagic, sizeof(kMagic));
  write_u32(os, kVersion);
  write_u32(os, static_cast<uint32_t>(ds.d_audio));
  write_u32(os, static_cast<uint32_t>(ds.d_video));
  write_u32(os, static_cast<uint32_t>(ds.vocab.size()));
  write_u64(os, ds.samples.size());
  for (const auto& w : ds.vocab.words) {
    write_u32(os, static_cast<uint32_t>(w.size()));
    os.write(w.data(), static_cast<std::streamsize>(w.size()));
  }
  for (const auto& s : ds.samples) {
    write_u32(os, static_cast<uint32_t>(s.audio.rows()));
    write_u32(os, static_cast<uint32_t>(s.video.rows()));
    write_u32(os, static_cast<uint32_t>(s.caption.size()));
    write_u32(os, static_cast<uint32_t>(s.bounds.starts.size()));
    write_features(os, s.audio);
    write_features(os, s.video);
    for (int id : s.caption) write_u32(os, static_cast<uint32_t>(id));
    for (int st : s.bounds.starts) write_u32(os, static_cast<uint32_t>(st));
  }
  if (!os) throw std::runtime_error("write_dataset: write failed for " + path);
}

Dataset read_dataset(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("read_dataset: cannot open " + path);
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error("read_dataset: bad magic in " + path);
  if (read_u32(is) != kVersion) throw std::runtime_error("read_dataset: unsupported version");
  Dataset ds;
  ds.d_audio = static_cast<int>(read_u32(is));
  ds.d_video = static_cast<int>(read_u32(is));
  const uint32_t vocab_size = read_u32(is);
  const uint64_t n_samples = read_u64(is);
  ds.vocab.words.resize(vocab_size);
  for (uint32_t i = 0; i < vocab_size; ++i) {
    const uint32_t len = read_u32(is);
    std::string w(len, '\0');
    is.read(w.data(), len);
    ds.vocab.words[i] = std::move(w);
  }
  ds.samples.reserve(n_samples);
  for (uint64_t i = 0; i < n_samples; ++i) {
    model::TrainSample s;
    const int la = static_cast<int>(read_u32(is));
    const int lv = static_cast<int>(read_u32(is));
    const uint32_t caption_len = read_u32(is);
    const uint32_t n_starts = read_u32(is);
    s.audio = read_features(is, la, ds.d_audio);
    s.video = read_features(is, lv, ds.d_video);
    s.caption.resize(caption_len);
    for (auto& id : s.caption) id = static_cast<int>(read_u32(is));
    s.bounds.starts.resize(n_starts);
    for (auto& st : s.bounds.starts) st = static_cast<int>(read_u32(is));
    if (!is) throw std::runtime_error("read_dataset: truncated file " + path);
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

}  // namespace capgen::harness
