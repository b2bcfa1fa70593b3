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

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "capgen/diff/tensor.hpp"

namespace capgen::diff {

/// Named trainable tensor with a persistent gradient accumulator and a
/// momentum buffer owned by the optimizer.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
  Tensor momentum;
};

class ParamStore {
 public:
  int add(std::string name, Tensor init) {
    Parameter p;
    p.name = std::move(name);
    p.grad = Tensor(init.shape());
    p.momentum = Tensor(init.shape());
    p.value = std::move(init);
    params_.push_back(std::move(p));
    return static_cast<int>(params_.size()) - 1;
  }

  Parameter& at(int i) { return params_[static_cast<size_t>(i)]; }
  const Parameter& at(int i) const { return params_[static_cast<size_t>(i)]; }
  int size() const { return static_cast<int>(params_.size()); }

  int find(const std::string& name) const {
    for (size_t i = 0; i < params_.size(); ++i)
      if (params_[i].name == name) return static_cast<int>(i);
    return -1;
  }

  void zero_grad() {
    for (auto& p : params_) p.grad.fill(0.0);
  }

  std::vector<Parameter>& all() { return params_; }
  const std::vector<Parameter>& all() const { return params_; }

 private:
  std::vector<Parameter> params_;
};

/// Plain SGD with optional momentum. Parameters outside the trainable
/// predicate are not touched at all (value and momentum stay bit-identical).
class Sgd {
 public:
  Sgd(double lr, double momentum = 0.0) : lr_(lr), momentum_(momentum) {}

  double learning_rate() const { return lr_; }
  void set_learning_rate(double lr) { lr_ = lr; }

  void step(ParamStore& store, const std::function<bool(const std::string&)>& trainable) {
    for (auto& p : store.all()) {
      if (!trainable(p.name)) continue;
      for (size_t i = 0; i < p.value.size(); ++i) {
        p.momentum[i] = momentum_ * p.momentum[i] + p.grad[i];
        p.value[i] -= lr_ * p.momentum[i];
      }
    }
  }

 private:
  double lr_;
  double momentum_;
};

}  // namespace capgen::diff
