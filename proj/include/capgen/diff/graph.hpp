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
#include <vector>

#include "capgen/diff/tensor.hpp"

namespace capgen::diff {

/// Handle into a Graph's tape.
struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

/// Reverse-mode tape. Nodes are appended in construction order, which is a
/// topological order by construction, so backward() is a single reverse
/// sweep. A Graph is single-threaded; build one per forward/backward pass.
///
/// Every primitive verifies its output is finite and throws on NaN/Inf.
class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;
  Graph(Graph&&) = default;
  Graph& operator=(Graph&&) = default;

  // ---- leaves -------------------------------------------------------------
  Var leaf(Tensor value, bool requires_grad = false);
  Var constant(Tensor value) { return leaf(std::move(value), false); }
  Var constant_scalar(double v) { return leaf(Tensor::scalar(v), false); }

  // ---- primitives ----------------------------------------------------------
  Var matmul(Var a, Var b);
  Var transpose(Var a);
  Var add(Var a, Var b);  // same shape, or b a vector broadcast across rows
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);  // elementwise, same shape
  Var scale(Var a, double s);
  Var add_scalar(Var a, double c);
  Var mul_by(Var a, Var s);  // s has a single element
  Var reciprocal(Var a);
  Var exp(Var a);
  Var log(Var a);
  Var relu(Var a);
  Var sigmoid(Var a);
  Var clamp(Var a, double lo, double hi);
  Var clamp_min(Var a, double lo);

  Var concat_cols(const std::vector<Var>& parts);
  Var concat_rows(const std::vector<Var>& parts);
  Var slice_cols(Var a, int c0, int c1);
  Var select_rows(Var a, std::vector<int> idx);
  /// Embedding lookup: rows of `table` gathered by token id.
  Var embedding(Var table, const std::vector<int>& ids);

  /// x[M,K] * w[K,N] + b[N]
  Var linear(Var x, Var w, Var b);
  Var softmax_rows(Var a);
  Var log_softmax_rows(Var a);
  Var layer_norm(Var x, Var gain, Var bias, double eps = 1e-5);
  /// softmax(q kᵀ / sqrt(d)) v, optionally with a causal mask
  /// (row i attends to keys 0..i; requires rows(q) == rows(k) when causal).
  Var attention(Var q, Var k, Var v, bool causal);
  /// Adds the sinusoidal positional encoding to every row.
  Var positional_encoding_add(Var x);

  Var sum(Var a);
  Var mean(Var a);
  Var cell(Var a, int r, int c);
  /// sum_j w[j] * a[row, j] as a scalar node; w is a fixed vector.
  Var dot_row_const(Var a, int row, std::vector<double> w);

  // ---- execution ------------------------------------------------------------
  /// Accumulates d(loss)/d(node) into the grad buffer of every node with
  /// requires_grad on the path. `loss` must hold exactly one element.
  void backward(Var loss);

  const Tensor& value(Var v) const { return nodes_[static_cast<size_t>(v.id)].value; }
  double scalar_value(Var v) const { return value(v)[0]; }
  /// Gradient buffer; empty tensor if the node never received gradient.
  const Tensor& grad(Var v) const { return nodes_[static_cast<size_t>(v.id)].grad; }
  bool requires_grad(Var v) const { return nodes_[static_cast<size_t>(v.id)].requires_grad; }
  size_t num_nodes() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    std::function<void(Graph&, int)> backward_fn;  // null for leaves
  };

  friend struct GraphDetail;

  Node& node(int id) { return nodes_[static_cast<size_t>(id)]; }
  const Node& node(int id) const { return nodes_[static_cast<size_t>(id)]; }
  Tensor& grad_buf(int id);
  bool any_requires(std::initializer_list<Var> vs) const;
  Var push(Tensor value, bool requires_grad, std::function<void(Graph&, int)> fn,
           const char* op);

  std::vector<Node> nodes_;
};

}  // namespace capgen::diff
