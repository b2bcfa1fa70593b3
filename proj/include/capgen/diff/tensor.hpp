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

#include <cstddef>
#include <string>
#include <vector>

namespace capgen::diff {

/// Dense 64-bit tensor. Rank 0 (scalar), 1 and 2 are what the model needs;
/// the shape is kept generic so checkpoints stay self-describing.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int> shape);
  Tensor(std::vector<int> shape, std::vector<double> data);

  static Tensor scalar(double v);
  static Tensor zeros_like(const Tensor& t) { return Tensor(t.shape_); }

  const std::vector<int>& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  int dim(int i) const { return shape_[static_cast<size_t>(i)]; }
  size_t size() const { return data_.size(); }

  /// Rows/cols of a tensor viewed as a matrix: scalars and vectors are
  /// treated as a single row.
  int rows() const { return rank() >= 2 ? shape_[0] : 1; }
  int cols() const {
    if (rank() >= 2) return shape_[1];
    return rank() == 1 ? shape_[0] : 1;
  }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  double& operator[](size_t i) { return data_[i]; }
  double operator[](size_t i) const { return data_[i]; }

  double& at(int r, int c) { return data_[static_cast<size_t>(r) * cols() + c]; }
  double at(int r, int c) const { return data_[static_cast<size_t>(r) * cols() + c]; }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }
  void fill(double v);
  bool all_finite() const;

  std::string shape_str() const;

 private:
  std::vector<int> shape_;
  std::vector<double> data_;
};

}  // namespace capgen::diff
