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

#include "capgen/diff/graph.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace capgen::diff {

namespace {

[[noreturn]] void shape_error(const char* op, const Tensor& a, const Tensor& b) {
  throw std::invalid_argument(std::string(op) + ": incompatible shapes " + a.shape_str() +
                              " and " + b.shape_str());
}

[[noreturn]] void shape_error(const char* op, const Tensor& a) {
  throw std::invalid_argument(std::string(op) + ": bad shape " + a.shape_str());
}

}  // namespace

Tensor& Graph::grad_buf(int id) {
  Node& n = node(id);
  if (n.grad.size() == 0) n.grad = Tensor(n.value.shape());
  return n.grad;
}

bool Graph::any_requires(std::initializer_list<Var> vs) const {
  for (Var v : vs)
    if (node(v.id).requires_grad) return true;
  return false;
}

Var Graph::push(Tensor value, bool requires_grad, std::function<void(Graph&, int)> fn,
                const char* op) {
  if (!value.all_finite())
    throw std::runtime_error(std::string(op) + ": non-finite value in output");
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  n.backward_fn = std::move(fn);
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Graph::leaf(Tensor value, bool requires_grad) {
  return push(std::move(value), requires_grad, nullptr, "leaf");
}

// ---------------------------------------------------------------------------

Var Graph::matmul(Var a, Var b) {
  const Tensor& ta = value(a);
  const Tensor& tb = value(b);
  const int m = ta.rows(), k = ta.cols(), k2 = tb.rows(), n = tb.cols();
  if (k != k2) shape_error("matmul", ta, tb);
  Tensor out({m, n});
  for (int i = 0; i < m; ++i) {
    const double* arow = ta.data() + static_cast<size_t>(i) * k;
    double* orow = out.data() + static_cast<size_t>(i) * n;
    for (int kk = 0; kk < k; ++kk) {
      const double av = arow[kk];
      if (av == 0.0) continue;
      const double* brow = tb.data() + static_cast<size_t>(kk) * n;
      for (int j = 0; j < n; ++j) orow[j] += av * brow[j];
    }
  }
  auto fn = [a, b, m, k, n](Graph& g, int self) {
    const Tensor& gr = g.node(self).grad;
    if (g.node(a.id).requires_grad) {
      Tensor& da = g.grad_buf(a.id);
      const Tensor& tb = g.value(b);
      // da += gr * b^T
      for (int i = 0; i < m; ++i) {
        const double* grow = gr.data() + static_cast<size_t>(i) * n;
        double* darow = da.data() + static_cast<size_t>(i) * k;
        for (int kk = 0; kk < k; ++kk) {
          const double* brow = tb.data() + static_cast<size_t>(kk) * n;
          double acc = 0.0;
          for (int j = 0; j < n; ++j) acc += grow[j] * brow[j];
          darow[kk] += acc;
        }
      }
    }
    if (g.node(b.id).requires_grad) {
      Tensor& db = g.grad_buf(b.id);
      const Tensor& ta = g.value(a);
      // db += a^T * gr
      for (int i = 0; i < m; ++i) {
        const double* arow = ta.data() + static_cast<size_t>(i) * k;
        const double* grow = gr.data() + static_cast<size_t>(i) * n;
        for (int kk = 0; kk < k; ++kk) {
          const double av = arow[kk];
          if (av == 0.0) continue;
          double* dbrow = db.data() + static_cast<size_t>(kk) * n;
          for (int j = 0; j < n; ++j) dbrow[j] += av * grow[j];
        }
      }
    }
  };
  return push(std::move(out), any_requires({a, b}), fn, "matmul");
}

Var Graph::transpose(Var a) {
  const Tensor& ta = value(a);
  const int m = ta.rows(), n = ta.cols();
  Tensor out({n, m});
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) out.at(j, i) = ta.at(i, j);
  auto fn = [a, m, n](Graph& g, int self) {
    if (!g.node(a.id).requires_grad) return;
    const Tensor& gr = g.node(self).grad;
    Tensor& da = g.grad_buf(a.id);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) da[static_cast<size_t>(i) * n + j] += gr.at(j, i);
  };
  return push(std::move(out), any_requires({a}), fn, "transpose");
}

Var Graph::add(Var a, Var b) {
  const Tensor& ta = value(a);
  const Tensor& tb = value(b);
  if (ta.same_shape(tb)) {
    Tensor out = ta;
    for (size_t i = 0; i < out.size(); ++i) out[i] += tb[i];
    auto fn = [a, b](Graph& g, int self) {
      const Tensor& gr = g.node(self).grad;
      if (g.node(a.id).requires_grad) {
        Tensor& da = g.grad_buf(a.id);
        for (size_t i = 0; i < gr.size(); ++i) da[i] += gr[i];
      }
      if (g.node(b.id).requires_grad) {
        Tensor& db = g.grad_buf(b.id);
        for (size_t i = 0; i < gr.size(); ++i) db[i] += gr[i];
      }
    };
    return push(std::move(out), any_requires({a, b}), fn, "add");
  }
  // Row broadcast: b is a vector of length cols(a).
  const int m = ta.rows(), n = ta.cols();
  if (static_cast<int>(tb.size()) != n) shape_error("add", ta, tb);
  Tensor out = ta;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) out.at(i, j) += tb[static_cast<size_t>(j)];
  auto fn = [a, b, m, n](Graph& g, int self) {
    const Tensor& gr = g.node(self).grad;
    if (g.node(a.id).requires_grad) {
      Tensor& da = g.grad_buf(a.id);
      for (size_t i = 0; i < gr.size(); ++i) da[i] += gr[i];
    }
    if (g.node(b.id).requires_grad) {
      Tensor& db = g.grad_buf(b.id);
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) db[static_cast<size_t>(j)] += gr[static_cast<size_t>(i) * n + j];
    }
  };
  return push(std::move(out), any_requires({a, b}), fn, "add");
}

Var Graph::sub(Var a, Var b) {
  const Tensor& ta = value(a);
  const Tensor& tb = value(b);
  if (!ta.same_shape(tb)) shape_error("sub", ta, tb);
  Tensor out = ta;
  for (size_t i = 0; i < out.size(); ++i) out[i] -= tb[i];
  auto fn = [a, b](Graph& g, int self) {
    const Tensor& gr = g.node(self).grad;
    if (g.node(a.id).requires_grad) {
      Tensor& da = g.grad_buf(a.id);
      for (size_t i = 0; i < gr.size(); ++i) da[i] += gr[i];
    }
    if (g.node(b.id).requires_grad) {
      Tensor& db = g.grad_buf(b.id);
      for (size_t i = 0; i < gr.size(); ++i) db[i] -= gr[i];
    }
  };
  return push(std::move(out), any_requires({a, b}), fn, "sub");
}

Var Graph::mul(Var a, Var b) {
  const Tensor& ta = value(a);
  const Tensor& tb = value(b);
  if (!ta.same_shape(tb)) shape_error("mul", ta, tb);
  Tensor out = ta;
  for (size_t i = 0; i < out.size(); ++i) out[i] *= tb[i];
  auto fn = [a, b](Graph& g, int self) {
    const Tensor& gr = g.node(self).grad;
    if (g.node(a.id).requires_grad) {
      Tensor& da = g.grad_buf(a.id);
      const Tensor& tb = g.value(b);
      for (size_t i = 0; i < gr.size(); ++i) da[i] += gr[i] * tb[i];
    }
    if (g.node(b.id).requires_grad) {
      Tensor& db = g.grad_buf(b.id);
      const Tensor& ta = g.value(a);
      for (size_t i = 0; i < gr.size(); ++i) db[i] += gr[i] * ta[i];
    }
  };
  return push(std::move(out), any_requires({a, b}), fn, "mul");
}

Var Graph::scale(Var a, double s) {
  Tensor out = value(a);
  for (size_t i = 0; i < out.size(); ++i) out[i] *= s;
  auto fn = [a, s](Graph& g, int self) {
    if (!g.node(a.id).requires_grad) return;
    const Tensor& gr = g.node(self).grad;
    Tensor& da = g.grad_buf(a.id);
    for (size_t i = 0; i < gr.size(); ++i) da[i] += gr[i] * s;
  };
  return push(std::move(out), any_requires({a}), fn, "scale");
}

Var Graph::add_scalar(Var a, double c) {
  Tensor out = value(a);
  for (size_t i = 0; i < out.size(); ++i) out[i] += c;
  auto fn = [a](Graph& g, int self) {
    if (!g.node(a.id).requires_grad) return;
    const Tensor& gr = g.node(self).grad;
    Tensor& da = g.grad_buf(a.id);
    for (size_t i = 0; i < gr.size(); ++i) da[i] += gr[i];
  };
  return push(std::move(out), any_requires({a}), fn, "add_scalar");
}

Var Graph::mul_by(Var a, Var s) {
  const Tensor& ts = value(s);
  if (ts.size() != 1) shape_error("mul_by", ts);
  const double sv = ts[0];
  Tensor out = value(a);
  for (size_t i = 0; i < out.size(); ++i) out[i] *= sv;
  auto fn = [a, s, sv](Graph& g, int self) {
    const Tensor& gr = g.node(self).grad;
    if (g.node(a.id).requires_grad) {
      Tensor& da = g.grad_buf(a.id);
      for (size_t i = 0; i < gr.size(); ++i) da[i] += gr[i] * sv;
    }
    if (g.node(s.id).requires_grad) {
      Tensor& ds = g.grad_buf(s.id);
      const Tensor& ta = g.value(a);
      double acc = 0.0;
      for (size_t i = 0; i < gr.size(); ++i) acc += gr[i] * ta[i];
      ds[0] += acc;
    }
  };
  return push(std::move(out), any_requires({a, s}), fn, "mul_by");
}

Var Graph::reciprocal(Var a) {
  Tensor out = value(a);
  for (size_t i = 0; i < out.size(); ++i) out[i] = 1.0 / out[i];
  auto fn = [a](Graph& g, int self) {
    if (!g.node(a.id).requires_grad) return;
    const Tensor& gr = g.node(self).grad;
    const Tensor& y = g.node(self).value;
    Tensor& da = g.grad_buf(a.id);
    for (size_t i = 0; i < gr.size(); ++i) da[i] -= gr[i] * y[i] * y[i];
  };
  return push(std::move(out), any_requires({a}), fn, "reciprocal");
}

Var Graph::exp(Var a) {
  Tensor out = value(a);
  for (size_t i = 0; i < out.size(); ++i) out[i] = std::exp(out[i]);
  auto fn = [a](Graph& g, int self) {
    if (!g.node(a.id).requires_grad) return;
    const Tensor& gr = g.node(self).grad;
    const Tensor& y = g.node(self).value;
    Tensor& da = g.grad_buf(a.id);
    for (size_t i = 0; i < gr.size(); ++i) da[i] += gr[i] * y[i];
  };
  return push(std::move(out), any_requires({a}), fn, "exp");
}

Var Graph::log(Var a) {
  const Tensor& ta = value(a);
  Tensor out = ta;
  for (size_t i = 0; i < out.size(); ++i) out[i] = std::log(out[i]);
  auto fn = [a](Graph& g, int self) {
    if (!g.node(a.id).requires_grad) return;
    const Tensor& gr = g.node(self).grad;
    const Tensor& ta = g.value(a);
    Tensor& da = g.grad_buf(a.id);
    for (size_t i = 0; i < gr.size(); ++i) da[i] += gr[i] / ta[i];
  };
  return push(std::move(out), any_requires({a}), fn, "log");
}

Var Graph::relu(Var a) {
  Tensor out = value(a);
  for (size_t i = 0; i < out.size(); ++i) out[i] = std::max(0.0, out[i]);
  auto fn = [a](Graph& g, int self) {
    if (!g.node(a.id).requires_grad) return;
    const Tensor& gr = g.node(self).grad;
    const Tensor& ta = g.value(a);
    Tensor& da = g.grad_buf(a.id);
    for (size_t i = 0; i < gr.size(); ++i)
      if (ta[i] > 0.0) da[i] += gr[i];
  };
  return push(std::move(out), any_requires({a}), fn, "relu");
}

Var Graph::sigmoid(Var a) {
  Tensor out = value(a);
  for (size_t i = 0; i < out.size(); ++i) out[i] = 1.0 / (1.0 + std::exp(-out[i]));
  auto fn = [a](Graph& g, int self) {
    if (!g.node(a.id).requires_grad) return;
    const Tensor& gr = g.node(self).grad;
    const Tensor& y = g.node(self).value;
    Tensor& da = g.grad_buf(a.id);
    for (size_t i = 0; i < gr.size(); ++i) da[i] += gr[i] * y[i] * (1.0 - y[i]);
  };
  return push(std::move(out), any_requires({a}), fn, "sigmoid");
}

Var Graph::clamp(Var a, double lo, double hi) {
  const Tensor& ta = value(a);
  Tensor out = ta;
  for (size_t i = 0; i < out.size(); ++i) out[i] = std::min(hi, std::max(lo, out[i]));
  auto fn = [a, lo, hi](Graph& g, int self) {
    if (!g.node(a.id).requires_grad) return;
    const Tensor& gr = g.node(self).grad;
    const Tensor& ta = g.value(a);
    Tensor& da = g.grad_buf(a.id);
    for (size_t i = 0; i < gr.size(); ++i)
      if (ta[i] > lo && ta[i] < hi) da[i] += gr[i];
  };
  return push(std::move(out), any_requires({a}), fn, "clamp");
}

Var Graph::clamp_min(Var a, double lo) {
  const Tensor& ta = value(a);
  Tensor out = ta;
  for (size_t i = 0; i < out.size(); ++i) out[i] = std::max(lo, out[i]);
  auto fn = [a, lo](Graph& g, int self) {
    if (!g.node(a.id).requires_grad) return;
    const Tensor& gr = g.node(self).grad;
    const Tensor& ta = g.value(a);
    Tensor& da = g.grad_buf(a.id);
    for (size_t i = 0; i < gr.size(); ++i)
      if (ta[i] > lo) da[i] += gr[i];
  };
  return push(std::move(out), any_requires({a}), fn, "clamp_min");
}

Var Graph::concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: no inputs");
  const int m = value(parts[0]).rows();
  int total = 0;
  for (Var p : parts) {
    if (value(p).rows() != m) shape_error("concat_cols", value(parts[0]), value(p));
    total += value(p).cols();
  }
  Tensor out({m, total});
  int off = 0;
  for (Var p : parts) {
    const Tensor& tp = value(p);
    const int n = tp.cols();
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) out.at(i, off + j) = tp.at(i, j);
    off += n;
  }
  bool req = false;
  for (Var p : parts) req = req || node(p.id).requires_grad;
  auto fn = [parts, m, total](Graph& g, int self) {
    const Tensor& gr = g.node(self).grad;
    int off = 0;
    for (Var p : parts) {
      const int n = g.value(p).cols();
      if (g.node(p.id).requires_grad) {
        Tensor& dp = g.grad_buf(p.id);
        for (int i = 0; i < m; ++i)
          for (int j = 0; j < n; ++j) dp[static_cast<size_t>(i) * n + j] += gr[static_cast<size_t>(i) * total + off + j];
      }
      off += n;
    }
  };
  return push(std::move(out), req, fn, "concat_cols");
}

Var Graph::concat_rows(const std::vector<Var>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_rows: no inputs");
  const int n = value(parts[0]).cols();
  int total = 0;
  for (Var p : parts) {
    if (value(p).cols() != n) shape_error("concat_rows", value(parts[0]), value(p));
    total += value(p).rows();
  }
  Tensor out({total, n});
  int off = 0;
  for (Var p : parts) {
    const Tensor& tp = value(p);
    for (int i = 0; i < tp.rows(); ++i)
      for (int j = 0; j < n; ++j) out.at(off + i, j) = tp.at(i, j);
    off += tp.rows();
  }
  bool req = false;
  for (Var p : parts) req = req || node(p.id).requires_grad;
  auto fn = [parts, n](Graph& g, int self) {
    const Tensor& gr = g.node(self).grad;
    int off = 0;
    for (Var p : parts) {
      const int m = g.value(p).rows();
      if (g.node(p.id).requires_grad) {
        Tensor& dp = g.grad_buf(p.id);
        for (int i = 0; i < m; ++i)
          for (int j = 0; j < n; ++j) dp[static_cast<size_t>(i) * n + j] += gr[static_cast<size_t>(off + i) * n + j];
      }
      off += m;
    }
  };
  return push(std::move(out), req, fn, "concat_rows");
}

Var Graph::slice_cols(Var a, int c0, int c1) {
  const Tensor& ta = value(a);
  const int m = ta.rows(), n = ta.cols();
  if (c0 < 0 || c1 > n || c0 >= c1) shape_error("slice_cols", ta);
  Tensor out({m, c1 - c0});
  for (int i = 0; i < m; ++i)
    for (int j = c0; j < c1; ++j) out.at(i, j - c0) = ta.at(i, j);
  auto fn = [a, c0, c1, m, n](Graph& g, int self) {
    if (!g.node(a.id).requires_grad) return;
    const Tensor& gr = g.node(self).grad;
    Tensor& da = g.grad_buf(a.id);
    const int w = c1 - c0;
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < w; ++j) da[static_cast<size_t>(i) * n + c0 + j] += gr[static_cast<size_t>(i) * w + j];
  };
  return push(std::move(out), any_requires({a}), fn, "slice_cols");
}

Var Graph::select_rows(Var a, std::vector<int> idx) {
  const Tensor& ta = value(a);
  const int n = ta.cols();
  for (int r : idx)
    if (r < 0 || r >= ta.rows()) shape_error("select_rows", ta);
  Tensor out({static_cast<int>(idx.size()), n});
  for (size_t i = 0; i < idx.size(); ++i)
    for (int j = 0; j < n; ++j) out.at(static_cast<int>(i), j) = ta.at(idx[i], j);
  auto fn = [a, idx = std::move(idx), n](Graph& g, int self) {
    if (!g.node(a.id).requires_grad) return;
    const Tensor& gr = g.node(self).grad;
    Tensor& da = g.grad_buf(a.id);
    for (size_t i = 0; i < idx.size(); ++i)
      for (int j = 0; j < n; ++j)
        da[static_cast<size_t>(idx[i]) * n + j] += gr[i * static_cast<size_t>(n) + j];
  };
  return push(std::move(out), any_requires({a}), fn, "select_rows");
}

Var Graph::embedding(Var table, const std::vector<int>& ids) {
  return select_rows(table, ids);
}

Var Graph::linear(Var x, Var w, Var b) {
  const Tensor& tx = value(x);
  const Tensor& tw = value(w);
  const Tensor& tb = value(b);
  const int m = tx.rows(), k = tx.cols(), n = tw.cols();
  if (tw.rows() != k) shape_error("linear", tx, tw);
  if (static_cast<int>(tb.size()) != n) shape_error("linear", tw, tb);
  Tensor out({m, n});
  for (int i = 0; i < m; ++i) {
    double* orow = out.data() + static_cast<size_t>(i) * n;
    for (int j = 0; j < n; ++j) orow[j] = tb[static_cast<size_t>(j)];
    const double* xrow = tx.data() + static_cast<size_t>(i) * k;
    for (int kk = 0; kk < k; ++kk) {
      const double xv = xrow[kk];
      if (xv == 0.0) continue;
      const double* wrow = tw.data() + static_cast<size_t>(kk) * n;
      for (int j = 0; j < n; ++j) orow[j] += xv * wrow[j];
    }
  }
  auto fn = [x, w, b, m, k, n](Graph& g, int self) {
    const Tensor& gr = g.node(self).grad;
    if (g.node(x.id).requires_grad) {
      Tensor& dx = g.grad_buf(x.id);
      const Tensor& tw = g.value(w);
      for (int i = 0; i < m; ++i) {
        const double* grow = gr.data() + static_cast<size_t>(i) * n;
        double* dxrow = dx.data() + static_cast<size_t>(i) * k;
        for (int kk = 0; kk < k; ++kk) {
          const double* wrow = tw.data() + static_cast<size_t>(kk) * n;
          double acc = 0.0;
          for (int j = 0; j < n; ++j) acc += grow[j] * wrow[j];
          dxrow[kk] += acc;
        }
      }
    }
    if (g.node(w.id).requires_grad) {
      Tensor& dw = g.grad_buf(w.id);
      const Tensor& tx = g.value(x);
      for (int i = 0; i < m; ++i) {
        const double* xrow = tx.data() + static_cast<size_t>(i) * k;
        const double* grow = gr.data() + static_cast<size_t>(i) * n;
        for (int kk = 0; kk < k; ++kk) {
          const double xv = xrow[kk];
          if (xv == 0.0) continue;
          double* dwrow = dw.data() + static_cast<size_t>(kk) * n;
          for (int j = 0; j < n; ++j) dwrow[j] += xv * grow[j];
        }
      }
    }
    if (g.node(b.id).requires_grad) {
      Tensor& db = g.grad_buf(b.id);
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) db[static_cast<size_t>(j)] += gr[static_cast<size_t>(i) * n + j];
    }
  };
  return push(std::move(out), any_requires({x, w, b}), fn, "linear");
}

Var Graph::softmax_rows(Var a) {
  const Tensor& ta = value(a);
  const int m = ta.rows(), n = ta.cols();
  Tensor out({m, n});
  for (int i = 0; i < m; ++i) {
    const double* row = ta.data() + static_cast<size_t>(i) * n;
    double mx = row[0];
    for (int j = 1; j < n; ++j) mx = std::max(mx, row[j]);
    double z = 0.0;
    for (int j = 0; j < n; ++j) {
      const double e = std::exp(row[j] - mx);
      out.at(i, j) = e;
      z += e;
    }
    for (int j = 0; j < n; ++j) out.at(i, j) /= z;
  }
  auto fn = [a, m, n](Graph& g, int self) {
    if (!g.node(a.id).requires_grad) return;
    const Tensor& gr = g.node(self).grad;
    const Tensor& y = g.node(self).value;
    Tensor& da = g.grad_buf(a.id);
    for (int i = 0; i < m; ++i) {
      double dot = 0.0;
      for (int j = 0; j < n; ++j) dot += gr.at(i, j) * y.at(i, j);
      for (int j = 0; j < n; ++j)
        da[static_cast<size_t>(i) * n + j] += y.at(i, j) * (gr.at(i, j) - dot);
    }
  };
  return push(std::move(out), any_requires({a}), fn, "softmax");
}

Var Graph::log_softmax_rows(Var a) {
  const Tensor& ta = value(a);
  const int m = ta.rows(), n = ta.cols();
  Tensor out({m, n});
  for (int i = 0; i < m; ++i) {
    const double* row = ta.data() + static_cast<size_t>(i) * n;
    double mx = row[0];
    for (int j = 1; j < n; ++j) mx = std::max(mx, row[j]);
    double z = 0.0;
    for (int j = 0; j < n; ++j) z += std::exp(row[j] - mx);
    const double lz = mx + std::log(z);
    for (int j = 0; j < n; ++j) out.at(i, j) = row[j] - lz;
  }
  auto fn = [a, m, n](Graph& g, int self) {
    if (!g.node(a.id).requires_grad) return;
    const Tensor& gr = g.node(self).grad;
    const Tensor& y = g.node(self).value;
    Tensor& da = g.grad_buf(a.id);
    for (int i = 0; i < m; ++i) {
      double gsum = 0.0;
      for (int j = 0; j < n; ++j) gsum += gr.at(i, j);
      for (int j = 0; j < n; ++j)
        da[static_cast<size_t>(i) * n + j] += gr.at(i, j) - std::exp(y.at(i, j)) * gsum;
    }
  };
  return push(std::move(out), any_requires({a}), fn, "log_softmax");
}

Var Graph::layer_norm(Var x, Var gain, Var bias, double eps) {
  const Tensor& tx = value(x);
  const Tensor& tg = value(gain);
  const Tensor& tb = value(bias);
  const int m = tx.rows(), n = tx.cols();
  if (static_cast<int>(tg.size()) != n || static_cast<int>(tb.size()) != n)
    shape_error("layer_norm", tx, tg);
  Tensor out({m, n});
  for (int i = 0; i < m; ++i) {
    const double* row = tx.data() + static_cast<size_t>(i) * n;
    double mu = 0.0;
    for (int j = 0; j < n; ++j) mu += row[j];
    mu /= n;
    double var = 0.0;
    for (int j = 0; j < n; ++j) var += (row[j] - mu) * (row[j] - mu);
    var /= n;
    const double s = 1.0 / std::sqrt(var + eps);
    for (int j = 0; j < n; ++j) out.at(i, j) = (row[j] - mu) * s * tg[static_cast<size_t>(j)] + tb[static_cast<size_t>(j)];
  }
  auto fn = [x, gain, bias, m, n, eps](Graph& g, int self) {
    const Tensor& gr = g.node(self).grad;
    const Tensor& tx = g.value(x);
    const Tensor& tg = g.value(gain);
    std::vector<double> xhat(static_cast<size_t>(n));
    for (int i = 0; i < m; ++i) {
      const double* row = tx.data() + static_cast<size_t>(i) * n;
      double mu = 0.0;
      for (int j = 0; j < n; ++j) mu += row[j];
      mu /= n;
      double var = 0.0;
      for (int j = 0; j < n; ++j) var += (row[j] - mu) * (row[j] - mu);
      var /= n;
      const double s = 1.0 / std::sqrt(var + eps);
      for (int j = 0; j < n; ++j) xhat[static_cast<size_t>(j)] = (row[j] - mu) * s;

      if (g.node(gain.id).requires_grad) {
        Tensor& dg = g.grad_buf(gain.id);
        for (int j = 0; j < n; ++j) dg[static_cast<size_t>(j)] += gr.at(i, j) * xhat[static_cast<size_t>(j)];
      }
      if (g.node(bias.id).requires_grad) {
        Tensor& db = g.grad_buf(bias.id);
        for (int j = 0; j < n; ++j) db[static_cast<size_t>(j)] += gr.at(i, j);
      }
      if (g.node(x.id).requires_grad) {
        Tensor& dx = g.grad_buf(x.id);
        double mean_dxhat = 0.0, mean_dxhat_xhat = 0.0;
        for (int j = 0; j < n; ++j) {
          const double dxh = gr.at(i, j) * tg[static_cast<size_t>(j)];
          mean_dxhat += dxh;
          mean_dxhat_xhat += dxh * xhat[static_cast<size_t>(j)];
        }
        mean_dxhat /= n;
        mean_dxhat_xhat /= n;
        for (int j = 0; j < n; ++j) {
          const double dxh = gr.at(i, j) * tg[static_cast<size_t>(j)];
          dx[static_cast<size_t>(i) * n + j] +=
              s * (dxh - mean_dxhat - xhat[static_cast<size_t>(j)] * mean_dxhat_xhat);
        }
      }
    }
  };
  return push(std::move(out), any_requires({x, gain, bias}), fn, "layer_norm");
}

Var Graph::attention(Var q, Var k, Var v, bool causal) {
  // Copy extents up front: pushing nodes may reallocate the tape.
  const int lq = value(q).rows(), dq = value(q).cols();
  const int lk = value(k).rows(), dk = value(k).cols();
  const int lv = value(v).rows();
  if (dq != dk) shape_error("attention", value(q), value(k));
  if (lk != lv) shape_error("attention", value(k), value(v));
  if (causal && lq != lk)
    throw std::invalid_argument("attention: causal mask needs matching query/key lengths");
  Var scores = scale(matmul(q, transpose(k)), 1.0 / std::sqrt(static_cast<double>(dq)));
  if (causal) {
    Tensor mask({lq, lq});
    for (int i = 0; i < lq; ++i)
      for (int j = i + 1; j < lq; ++j) mask.at(i, j) = -1e30;
    scores = add(scores, constant(std::move(mask)));
  }
  return matmul(softmax_rows(scores), v);
}

Var Graph::positional_encoding_add(Var x) {
  const Tensor& tx = value(x);
  const int m = tx.rows(), n = tx.cols();
  Tensor out = tx;
  for (int pos = 0; pos < m; ++pos)
    for (int j = 0; j < n; ++j) {
      const double expo = static_cast<double>(2 * (j / 2)) / n;
      const double angle = pos / std::pow(10000.0, expo);
      out.at(pos, j) += (j % 2 == 0) ? std::sin(angle) : std::cos(angle);
    }
  auto fn = [x](Graph& g, int self) {
    if (!g.node(x.id).requires_grad) return;
    const Tensor& gr = g.node(self).grad;
    Tensor& dx = g.grad_buf(x.id);
    for (size_t i = 0; i < gr.size(); ++i) dx[i] += gr[i];
  };
  return push(std::move(out), any_requires({x}), fn, "positional_encoding_add");
}

Var Graph::sum(Var a) {
  const Tensor& ta = value(a);
  double acc = 0.0;
  for (size_t i = 0; i < ta.size(); ++i) acc += ta[i];
  auto fn = [a](Graph& g, int self) {
    if (!g.node(a.id).requires_grad) return;
    const double gv = g.node(self).grad[0];
    Tensor& da = g.grad_buf(a.id);
    for (size_t i = 0; i < da.size(); ++i) da[i] += gv;
  };
  return push(Tensor::scalar(acc), any_requires({a}), fn, "sum");
}

Var Graph::mean(Var a) {
  const Tensor& ta = value(a);
  const double inv = 1.0 / static_cast<double>(ta.size());
  double acc = 0.0;
  for (size_t i = 0; i < ta.size(); ++i) acc += ta[i];
  acc *= inv;
  auto fn = [a, inv](Graph& g, int self) {
    if (!g.node(a.id).requires_grad) return;
    const double gv = g.node(self).grad[0] * inv;
    Tensor& da = g.grad_buf(a.id);
    for (size_t i = 0; i < da.size(); ++i) da[i] += gv;
  };
  return push(Tensor::scalar(acc), any_requires({a}), fn, "mean");
}

Var Graph::cell(Var a, int r, int c) {
  const Tensor& ta = value(a);
  if (r < 0 || r >= ta.rows() || c < 0 || c >= ta.cols()) shape_error("cell", ta);
  const int n = ta.cols();
  auto fn = [a, r, c, n](Graph& g, int self) {
    if (!g.node(a.id).requires_grad) return;
    g.grad_buf(a.id)[static_cast<size_t>(r) * n + c] += g.node(self).grad[0];
  };
  return push(Tensor::scalar(ta.at(r, c)), any_requires({a}), fn, "cell");
}

Var Graph::dot_row_const(Var a, int row, std::vector<double> w) {
  const Tensor& ta = value(a);
  const int n = ta.cols();
  if (row < 0 || row >= ta.rows() || static_cast<int>(w.size()) != n) shape_error("dot_row_const", ta);
  double acc = 0.0;
  for (int j = 0; j < n; ++j) acc += w[static_cast<size_t>(j)] * ta.at(row, j);
  auto fn = [a, row, w = std::move(w), n](Graph& g, int self) {
    if (!g.node(a.id).requires_grad) return;
    const double gv = g.node(self).grad[0];
    Tensor& da = g.grad_buf(a.id);
    for (int j = 0; j < n; ++j) da[static_cast<size_t>(row) * n + j] += gv * w[static_cast<size_t>(j)];
  };
  return push(Tensor::scalar(acc), any_requires({a}), fn, "dot_row_const");
}

void Graph::backward(Var loss) {
  if (!loss.valid() || node(loss.id).value.size() != 1)
    throw std::invalid_argument("backward: loss must hold exactly one element");
  if (!node(loss.id).requires_grad) return;  // nothing depends on a trainable leaf
  Tensor& seed = grad_buf(loss.id);
  seed[0] += 1.0;
  for (int id = loss.id; id >= 0; --id) {
    Node& n = node(id);
    if (!n.requires_grad || n.grad.size() == 0 || !n.backward_fn) continue;
    n.backward_fn(*this, id);
  }
}

}  // namespace capgen::diff
